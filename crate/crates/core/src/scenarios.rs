//! Initial conditions.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::engine::{AgentState, GameParams, OpinionId};
use crate::graph::{Graph, GraphKind, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid fractions: {0}")]
    InvalidFractions(String),
    #[error("droplet fraction must lie strictly between 0 and 1 (got {0})")]
    InvalidDropletFraction(f64),
    #[error("the droplet scenario needs a periodic lattice")]
    UnsupportedTopology,
    #[error("opinion-A count {count} is out of range for {n} nodes")]
    CountOutOfRange { count: usize, n: usize },
    #[error("need at least two opinions (got {0})")]
    TooFewOpinions(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    /// Each agent picks an opinion uniformly at random.
    RandomUniform,
    /// Exact per-opinion counts at random positions.
    Fractions(Vec<f64>),
    /// A centered square block of `minority` in a sea of `majority`.
    Droplet {
        fraction: f64,
        minority: OpinionId,
        majority: OpinionId,
    },
    /// The highest-degree nodes hold A, the rest B. The A count is
    /// `fraction_a * n` rounded as in [`apportion`].
    DegreePreferential { fraction_a: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Every holder of this opinion is committed.
    pub committed: Option<OpinionId>,
}

impl ScenarioSpec {
    pub fn random_uniform() -> Self {
        ScenarioSpec {
            kind: ScenarioKind::RandomUniform,
            committed: None,
        }
    }

    /// Draws an opinion assignment for `graph`.
    pub fn assign<R: Rng + ?Sized>(
        &self,
        graph: &Graph,
        num_opinions: usize,
        rng: &mut R,
    ) -> Result<Vec<OpinionId>, ScenarioError> {
        let n = graph.len();
        match &self.kind {
            ScenarioKind::RandomUniform => init_random_uniform(n, num_opinions, rng),
            ScenarioKind::Fractions(f) => init_fractions(n, f, rng),
            ScenarioKind::Droplet {
                fraction,
                minority,
                majority,
            } => init_droplet(graph, *minority, *majority, *fraction),
            ScenarioKind::DegreePreferential { fraction_a } => {
                let counts = apportion(n, &[*fraction_a, 1.0 - *fraction_a])?;
                init_degree_preferential(graph, counts[0])
            }
        }
    }

    /// Assignment plus agent states for `params`.
    pub fn agents<R: Rng + ?Sized>(
        &self,
        graph: &Graph,
        params: &GameParams,
        rng: &mut R,
    ) -> Result<Vec<AgentState>, ScenarioError> {
        let assignment = self.assign(graph, params.num_opinions, rng)?;
        Ok(apply_committed(&assignment, self.committed, params))
    }
}

pub fn init_random_uniform<R: Rng + ?Sized>(
    n: usize,
    num_opinions: usize,
    rng: &mut R,
) -> Result<Vec<OpinionId>, ScenarioError> {
    if num_opinions < 2 {
        return Err(ScenarioError::TooFewOpinions(num_opinions));
    }
    Ok((0..n)
        .map(|_| OpinionId(rng.gen_range(0..num_opinions) as u8))
        .collect())
}

pub fn validate_fractions(fractions: &[f64]) -> Result<(), ScenarioError> {
    if fractions.len() < 2 {
        return Err(ScenarioError::TooFewOpinions(fractions.len()));
    }
    if let Some(f) = fractions.iter().find(|f| !(**f >= 0.0 && f.is_finite())) {
        return Err(ScenarioError::InvalidFractions(format!(
            "negative or non-finite entry {f}"
        )));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ScenarioError::InvalidFractions(format!("entries sum to {sum}, not 1")));
    }
    Ok(())
}

/// Largest-remainder rounding of `n * f_k` to integers summing to `n`.
///
/// Each opinion first gets `floor(n * f_k)`; the leftover units go to the
/// largest fractional parts, ties broken by lower opinion id. Quotas within
/// 1e-9 of an integer are snapped to it first, so `0.44 * 900` yields 396
/// rather than 395 plus a remainder.
pub fn apportion(n: usize, fractions: &[f64]) -> Result<Vec<usize>, ScenarioError> {
    validate_fractions(fractions)?;
    let quotas: Vec<f64> = fractions
        .iter()
        .map(|f| {
            let q = f * n as f64;
            if (q - q.round()).abs() < 1e-9 {
                q.round()
            } else {
                q
            }
        })
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    Ok(counts)
}

pub fn init_fractions<R: Rng + ?Sized>(
    n: usize,
    fractions: &[f64],
    rng: &mut R,
) -> Result<Vec<OpinionId>, ScenarioError> {
    let counts = apportion(n, fractions)?;
    let mut assignment: Vec<OpinionId> = counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(OpinionId(k as u8), c))
        .collect();
    assignment.shuffle(rng);
    Ok(assignment)
}

/// Side lengths of the droplet block for a `rows x cols` lattice.
pub fn droplet_side(rows: usize, cols: usize, fraction: f64) -> (usize, usize) {
    let cells = fraction * (rows * cols) as f64;
    // Snap before the ceiling so 0.09 * 900 gives 9, not 10.
    let side = (cells.sqrt() - 1e-9).ceil().max(1.0) as usize;
    (side.min(rows - 1), side.min(cols - 1))
}

pub fn init_droplet(
    graph: &Graph,
    minority: OpinionId,
    majority: OpinionId,
    fraction: f64,
) -> Result<Vec<OpinionId>, ScenarioError> {
    let GraphKind::Lattice2dPbc { rows, cols } = graph.kind() else {
        return Err(ScenarioError::UnsupportedTopology);
    };
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ScenarioError::InvalidDropletFraction(fraction));
    }
    let (h, w) = droplet_side(rows, cols, fraction);
    let (top, left) = ((rows - h) / 2, (cols - w) / 2);
    Ok((0..rows * cols)
        .map(|v| {
            let (r, c) = (v / cols, v % cols);
            if (top..top + h).contains(&r) && (left..left + w).contains(&c) {
                minority
            } else {
                majority
            }
        })
        .collect())
}

/// Nodes sorted by descending degree, ties by ascending id.
pub fn nodes_by_degree(graph: &Graph) -> Vec<NodeId> {
    let mut nodes: Vec<NodeId> = (0..graph.len()).collect();
    nodes.sort_by(|&a, &b| graph.degree(b).cmp(&graph.degree(a)).then(a.cmp(&b)));
    nodes
}

pub fn init_degree_preferential(graph: &Graph, count_a: usize) -> Result<Vec<OpinionId>, ScenarioError> {
    let n = graph.len();
    if count_a > n {
        return Err(ScenarioError::CountOutOfRange { count: count_a, n });
    }
    let mut assignment = vec![OpinionId::B; n];
    for &v in nodes_by_degree(graph).iter().take(count_a) {
        assignment[v] = OpinionId::A;
    }
    Ok(assignment)
}

/// Turns an opinion assignment into agents with the game's starting budget
/// and change cost. Holders of `committed` become committed.
pub fn apply_committed(assignment: &[OpinionId], committed: Option<OpinionId>, params: &GameParams) -> Vec<AgentState> {
    assignment
        .iter()
        .map(|&opinion| AgentState {
            opinion,
            budget: params.initial_budget,
            change_cost: params.default_change_cost,
            committed: committed == Some(opinion),
        })
        .collect()
}

pub fn opinion_counts(assignment: &[OpinionId], num_opinions: usize) -> Vec<usize> {
    let mut counts = vec![0; num_opinions];
    for o in assignment {
        counts[o.index()] += 1;
    }
    counts
}
