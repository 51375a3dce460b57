//! Observables: opinion fractions, same-opinion clusters, absorption, and
//! the homophily/influence split of accepted flips.

use std::collections::VecDeque;

use serde::Serialize;

use crate::engine::{Attribution, GameState, InteractionRecord, OpinionId};
use crate::graph::Graph;

/// Running count of accepted opinion changes by cause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlipTally {
    pub homophily: u64,
    pub influence: u64,
}

impl FlipTally {
    pub fn record(&mut self, record: &InteractionRecord) {
        match record.attribution {
            Attribution::Homophily => self.homophily += 1,
            Attribution::Influence => self.influence += 1,
            Attribution::SameOpinion | Attribution::Rejected => {}
        }
    }

    pub fn total(&self) -> u64 {
        self.homophily + self.influence
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSample {
    pub round: u64,
    pub fractions: Vec<f64>,
    pub components: Vec<usize>,
    /// Holders divided by components; 0 for an absent opinion.
    pub mean_component_size: Vec<f64>,
    pub flips_homophily: u64,
    pub flips_influence: u64,
}

impl MetricsSample {
    pub fn capture(state: &GameState, tally: &FlipTally) -> MetricsSample {
        let components = components_per_opinion(state.graph(), &state.opinions(), state.params().num_opinions);
        let mean_component_size = state
            .counts()
            .iter()
            .zip(&components)
            .map(|(&holders, &c)| if c == 0 { 0.0 } else { holders as f64 / c as f64 })
            .collect();
        MetricsSample {
            round: state.round(),
            fractions: opinion_fractions(state),
            components,
            mean_component_size,
            flips_homophily: tally.homophily,
            flips_influence: tally.influence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl BudgetStats {
    pub fn of(budgets: impl IntoIterator<Item = f64>) -> BudgetStats {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for b in budgets {
            min = min.min(b);
            max = max.max(b);
            sum += b;
            n += 1;
        }
        if n == 0 {
            return BudgetStats {
                min: 0.0,
                mean: 0.0,
                max: 0.0,
            };
        }
        BudgetStats {
            min,
            mean: sum / n as f64,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub absorbed: bool,
    pub winner: Option<OpinionId>,
    /// First round at which a single opinion held every agent.
    pub t_absorb: Option<u64>,
    pub rounds_played: u64,
    pub final_fractions: Vec<f64>,
    pub final_components: Vec<usize>,
    pub flips_homophily: u64,
    pub flips_influence: u64,
    pub budgets: BudgetStats,
}

impl RunSummary {
    /// Number of opinions still held by at least one agent.
    pub fn surviving_opinions(&self) -> usize {
        self.final_fractions.iter().filter(|&&p| p > 0.0).count()
    }
}

pub fn fractions_from_counts(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

pub fn opinion_fractions(state: &GameState) -> Vec<f64> {
    fractions_from_counts(state.counts())
}

/// For each opinion, the number of connected components of the subgraph
/// induced by its holders (direct graph edges only).
pub fn components_per_opinion(graph: &Graph, opinions: &[OpinionId], num_opinions: usize) -> Vec<usize> {
    let mut components = vec![0; num_opinions];
    let mut seen = vec![false; graph.len()];
    let mut queue = VecDeque::new();
    for start in 0..graph.len() {
        if seen[start] {
            continue;
        }
        let opinion = opinions[start];
        components[opinion.index()] += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in graph.neighbors(u) {
                if !seen[v] && opinions[v] == opinion {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    components
}

pub fn is_absorbed(state: &GameState) -> Option<OpinionId> {
    state.absorbed()
}

/// Builds a summary from a recorded trajectory and the state it ended in.
///
/// Absorption time is recovered by rewinding the flips to the initial
/// counts and replaying them forward.
pub fn summarize_run(seed: u64, trajectory: &[InteractionRecord], final_state: &GameState) -> RunSummary {
    let mut tally = FlipTally::default();
    for r in trajectory {
        tally.record(r);
    }
    let n = final_state.agents().len();
    let mut counts = final_state.counts().to_vec();
    for r in trajectory.iter().rev().filter(|r| r.is_flip()) {
        counts[r.speaker_opinion.index()] -= 1;
        counts[r.listener_opinion_before.index()] += 1;
    }
    let mut t_absorb = counts.contains(&n).then_some(0);
    if t_absorb.is_none() {
        for r in trajectory.iter().filter(|r| r.is_flip()) {
            counts[r.listener_opinion_before.index()] -= 1;
            counts[r.speaker_opinion.index()] += 1;
            if counts[r.speaker_opinion.index()] == n {
                t_absorb = Some(r.round);
                break;
            }
        }
    }
    summary_from_parts(seed, final_state, t_absorb, tally)
}

pub(crate) fn summary_from_parts(seed: u64, state: &GameState, t_absorb: Option<u64>, tally: FlipTally) -> RunSummary {
    let winner = state.absorbed();
    RunSummary {
        seed,
        absorbed: winner.is_some(),
        winner,
        t_absorb: winner.and(t_absorb),
        rounds_played: state.round(),
        final_fractions: opinion_fractions(state),
        final_components: components_per_opinion(state.graph(), &state.opinions(), state.params().num_opinions),
        flips_homophily: tally.homophily,
        flips_influence: tally.influence,
        budgets: BudgetStats::of(state.agents().iter().map(|a| a.budget)),
    }
}
