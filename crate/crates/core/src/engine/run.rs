use std::sync::Arc;

use log::warn;

use super::{AgentState, EngineError, GameParams, GameState, InteractionRecord, OpinionId};
use crate::graph::Graph;
use crate::metrics::{self, FlipTally, MetricsSample, RunSummary};
use crate::seeds::{rng_from_seed, GameRng};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record a [`MetricsSample`] at round 0 and every this many rounds.
    pub sample_every: Option<u64>,
    /// Record the full opinion vector at round 0 and every this many rounds.
    pub snapshot_every: Option<u64>,
    /// Stop as soon as one opinion holds every agent.
    pub early_stop: bool,
    /// Keep every [`InteractionRecord`].
    pub record_trajectory: bool,
    /// Verify count and budget bookkeeping at every sample, panicking on a
    /// violation.
    pub check_invariants: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub round: u64,
    pub opinions: Vec<OpinionId>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Final state, after reward settlement.
    pub state: GameState,
    pub trajectory: Vec<InteractionRecord>,
    pub samples: Vec<MetricsSample>,
    pub snapshots: Vec<Snapshot>,
    pub summary: RunSummary,
}

/// Plays a full game seeded with `seed`.
pub fn run(
    graph: Arc<Graph>,
    params: GameParams,
    agents: Vec<AgentState>,
    seed: u64,
    options: &RunOptions,
) -> Result<RunOutput, EngineError> {
    let mut rng = rng_from_seed(seed);
    run_with_rng(graph, params, agents, seed, &mut rng, options)
}

/// Like [`run`], continuing an existing random stream (so that graph
/// generation, initialization and play can share one per-run stream).
/// `seed` is only recorded in the summary.
pub fn run_with_rng(
    graph: Arc<Graph>,
    params: GameParams,
    agents: Vec<AgentState>,
    seed: u64,
    rng: &mut GameRng,
    options: &RunOptions,
) -> Result<RunOutput, EngineError> {
    params.validate()?;
    check_radii(&graph, &params)?;
    let state = GameState::prepare(graph, params, agents)?;
    play(state, seed, rng, options)
}

/// Rejects radii larger than the diameter. Graphs too large for an exact
/// diameter are let through with a warning.
pub fn check_radii(graph: &Graph, params: &GameParams) -> Result<(), EngineError> {
    let widest = params.knowledge_radius.max(params.influence_radius);
    if widest <= 1 {
        return Ok(());
    }
    match graph.diameter_if_small() {
        Some(diameter) => {
            for (name, radius) in [
                ("knowledge", params.knowledge_radius),
                ("influence", params.influence_radius),
            ] {
                if radius > diameter {
                    return Err(EngineError::RadiusExceedsDiameter { name, radius, diameter });
                }
            }
            Ok(())
        }
        None => {
            warn!(
                "graph has {} nodes; skipping radius-vs-diameter validation",
                graph.len()
            );
            Ok(())
        }
    }
}

/// Plays a prepared game to the end and settles rewards.
pub fn play(
    mut state: GameState,
    seed: u64,
    rng: &mut GameRng,
    options: &RunOptions,
) -> Result<RunOutput, EngineError> {
    let mut trajectory = Vec::new();
    let mut samples = Vec::new();
    let mut snapshots = Vec::new();
    let mut tally = FlipTally::default();
    let mut t_absorb = state.absorbed().map(|_| 0);

    let due = |every: Option<u64>, t: u64| every.is_some_and(|e| e > 0 && t.is_multiple_of(e));
    let observe = |state: &GameState,
                   tally: &FlipTally,
                   samples: &mut Vec<MetricsSample>,
                   snapshots: &mut Vec<Snapshot>,
                   force: bool| {
        let t = state.round();
        let sample_due = due(options.sample_every, t) || (force && options.sample_every.is_some());
        if sample_due && samples.last().map(|s: &MetricsSample| s.round) != Some(t) {
            if options.check_invariants {
                if let Err(e) = state.check_invariants() {
                    panic!("invariant violated at round {t}: {e}");
                }
            }
            samples.push(MetricsSample::capture(state, tally));
        }
        let snapshot_due = due(options.snapshot_every, t) || (force && options.snapshot_every.is_some());
        if snapshot_due && snapshots.last().map(|s: &Snapshot| s.round) != Some(t) {
            snapshots.push(Snapshot {
                round: t,
                opinions: state.opinions(),
            });
        }
    };

    observe(&state, &tally, &mut samples, &mut snapshots, false);
    while !state.is_finished() {
        if options.early_stop && t_absorb.is_some() {
            break;
        }
        let record = state.step(rng)?;
        tally.record(&record);
        if record.is_flip() && t_absorb.is_none() && state.absorbed().is_some() {
            t_absorb = Some(record.round);
        }
        if options.record_trajectory {
            trajectory.push(record);
        }
        observe(&state, &tally, &mut samples, &mut snapshots, false);
    }
    observe(&state, &tally, &mut samples, &mut snapshots, true);

    state.settle_rewards();
    let summary = metrics::summary_from_parts(seed, &state, t_absorb, tally);
    Ok(RunOutput {
        state,
        trajectory,
        samples,
        snapshots,
        summary,
    })
}
