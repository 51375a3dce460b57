//! Monte-Carlo batches and one-parameter sweeps.
//!
//! Run `i` of a batch is seeded with `derive_run_seeds(master_seed, runs)[i]`;
//! run `r` of sweep cell `v` with `cell_run_seed(master_seed, v, r)`. One
//! per-run stream drives, in order, graph generation (Barabási–Albert only),
//! the initial assignment, and play. Results never depend on how many
//! threads execute the runs.

pub mod config;
pub mod output;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, EngineError, GameParams, GameState, RunOptions, Snapshot};
use crate::graph::{Graph, GraphError, NeighborhoodTable};
use crate::metrics::{MetricsSample, RunSummary};
use crate::scenarios::ScenarioError;
use crate::seeds::{cell_run_seed, derive_run_seeds, rng_from_seed};

pub use config::{load_config, ConfigError, ExperimentConfig, SweepSpec, TopologySpec};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("sweep parameter `{param}`: {source}")]
    SweepParam {
        param: String,
        #[source]
        source: ConfigError,
    },
    #[error("no sweep configured: add a [sweep] table or pass a parameter")]
    NoSweep,
}

/// What to keep from each run besides its summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchOptions {
    pub record_samples: bool,
    pub record_snapshots: bool,
    /// Check count and budget bookkeeping at every sample.
    pub check_invariants: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub run_id: usize,
    pub summary: RunSummary,
    pub samples: Vec<MetricsSample>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub num_opinions: usize,
    pub topology: TopologySpec,
    pub runs: Vec<RunResult>,
}

impl BatchResult {
    pub fn summaries(&self) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().map(|r| &r.summary)
    }
}

/// Graph and neighborhood tables shared by every run on a fixed topology.
struct SharedTopology {
    graph: Arc<Graph>,
    knowledge: Arc<NeighborhoodTable>,
    influence: Arc<NeighborhoodTable>,
}

fn share_topology(config: &ExperimentConfig) -> Result<Option<SharedTopology>, ExperimentError> {
    if config.topology.is_random() {
        return Ok(None);
    }
    let graph = config.topology.build(&mut rng_from_seed(0))?;
    engine::check_radii(&graph, &config.game)?;
    let knowledge = Arc::new(NeighborhoodTable::build(&graph, config.game.knowledge_radius)?);
    let influence = if config.game.influence_radius == config.game.knowledge_radius {
        Arc::clone(&knowledge)
    } else {
        Arc::new(NeighborhoodTable::build(&graph, config.game.influence_radius)?)
    };
    Ok(Some(SharedTopology {
        graph: Arc::new(graph),
        knowledge,
        influence,
    }))
}

fn run_options(config: &ExperimentConfig, opts: &BatchOptions) -> RunOptions {
    RunOptions {
        sample_every: (opts.record_samples || opts.check_invariants).then_some(config.sample_every),
        snapshot_every: if opts.record_snapshots {
            config.snapshot_every
        } else {
            None
        },
        early_stop: config.early_stop,
        record_trajectory: false,
        check_invariants: opts.check_invariants,
    }
}

fn execute(
    config: &ExperimentConfig,
    shared: Option<&SharedTopology>,
    run_id: usize,
    seed: u64,
    options: &RunOptions,
    keep_samples: bool,
) -> Result<RunResult, ExperimentError> {
    let mut rng = rng_from_seed(seed);
    let params: GameParams = config.game.clone();
    let output = match shared {
        Some(t) => {
            let agents = config.scenario.agents(&t.graph, &params, &mut rng)?;
            let state = GameState::new(
                Arc::clone(&t.graph),
                Arc::clone(&t.knowledge),
                Arc::clone(&t.influence),
                params,
                agents,
            )?;
            engine::play(state, seed, &mut rng, options)?
        }
        None => {
            let graph = config.topology.build(&mut rng)?;
            let agents = config.scenario.agents(&graph, &params, &mut rng)?;
            engine::run_with_rng(Arc::new(graph), params, agents, seed, &mut rng, options)?
        }
    };
    Ok(RunResult {
        run_id,
        summary: output.summary,
        samples: if keep_samples { output.samples } else { Vec::new() },
        snapshots: output.snapshots,
    })
}

fn execute_all(
    config: &ExperimentConfig,
    seeds: &[u64],
    opts: &BatchOptions,
) -> Result<Vec<RunResult>, ExperimentError> {
    let shared = share_topology(config)?;
    let options = run_options(config, opts);
    seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| execute(config, shared.as_ref(), i, seed, &options, opts.record_samples))
        .collect()
}

/// Runs `config.runs` games with time series and snapshots as configured.
pub fn run_batch(config: &ExperimentConfig) -> Result<BatchResult, ExperimentError> {
    run_batch_with(
        config,
        &BatchOptions {
            record_samples: true,
            record_snapshots: true,
            check_invariants: false,
        },
    )
}

pub fn run_batch_with(config: &ExperimentConfig, opts: &BatchOptions) -> Result<BatchResult, ExperimentError> {
    let seeds = derive_run_seeds(config.master_seed, config.runs);
    Ok(BatchResult {
        num_opinions: config.game.num_opinions,
        topology: config.topology,
        runs: execute_all(config, &seeds, opts)?,
    })
}

/// Runs a single game with an explicit seed.
pub fn run_single(config: &ExperimentConfig, seed: u64, opts: &BatchOptions) -> Result<RunResult, ExperimentError> {
    Ok(execute_all(config, &[seed], opts)?.remove(0))
}

/// Aggregate statistics for one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub runs: usize,
    pub frac_not_absorbed: f64,
    pub mean_final_p_a: f64,
    /// Mean absorption round over absorbed runs only.
    pub mean_t_absorb: Option<f64>,
    pub summaries: Vec<RunSummary>,
}

impl SweepRow {
    pub fn from_summaries(value: String, summaries: Vec<RunSummary>) -> SweepRow {
        let runs = summaries.len();
        let absorbed: Vec<u64> = summaries.iter().filter_map(|s| s.t_absorb).collect();
        SweepRow {
            value,
            runs,
            frac_not_absorbed: summaries.iter().filter(|s| !s.absorbed).count() as f64 / runs as f64,
            mean_final_p_a: summaries.iter().map(|s| s.final_fractions[0]).sum::<f64>() / runs as f64,
            mean_t_absorb: (!absorbed.is_empty())
                .then(|| absorbed.iter().map(|&t| t as f64).sum::<f64>() / absorbed.len() as f64),
            summaries,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: String,
    pub num_opinions: usize,
    pub rows: Vec<SweepRow>,
}

/// Resolves the config for every sweep value up front, so a bad parameter
/// path fails before any run starts.
pub fn sweep_configs(base: &toml::Table, spec: &SweepSpec) -> Result<Vec<(String, ExperimentConfig)>, ExperimentError> {
    spec.values
        .iter()
        .map(|value| {
            let wrap = |source| ExperimentError::SweepParam {
                param: spec.param.clone(),
                source,
            };
            let mut table = base.clone();
            config::set_path(&mut table, &spec.param, value.clone()).map_err(wrap)?;
            let mut cfg = ExperimentConfig::from_table(table).map_err(wrap)?;
            cfg.runs = spec.runs;
            Ok((config::format_value(value), cfg))
        })
        .collect()
}

/// Runs `spec.runs` games for every value of the swept parameter.
///
/// `base` is the (already overridden) config document; the swept value is
/// written into it and the result revalidated.
pub fn sweep(base: &toml::Table, spec: &SweepSpec) -> Result<SweepTable, ExperimentError> {
    sweep_with_progress(base, spec, |_| {})
}

pub fn sweep_with_progress(
    base: &toml::Table,
    spec: &SweepSpec,
    mut progress: impl FnMut(&SweepRow),
) -> Result<SweepTable, ExperimentError> {
    let cells = sweep_configs(base, spec)?;
    let num_opinions = cells.first().map(|(_, c)| c.game.num_opinions).unwrap_or(2);
    let mut rows = Vec::with_capacity(cells.len());
    for (cell, (value, cfg)) in cells.into_iter().enumerate() {
        let seeds: Vec<u64> = (0..spec.runs)
            .map(|r| cell_run_seed(cfg.master_seed, cell, r))
            .collect();
        let results = execute_all(&cfg, &seeds, &BatchOptions::default())?;
        let row = SweepRow::from_summaries(value, results.into_iter().map(|r| r.summary).collect());
        progress(&row);
        rows.push(row);
    }
    Ok(SweepTable {
        param: spec.param.clone(),
        num_opinions,
        rows,
    })
}
