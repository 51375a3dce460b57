//! Experiment configuration files.
//!
//! A config is a TOML document with three optional tables (`topology`,
//! `game`, `scenario`), an optional `sweep` table, and a few top-level keys.
//! Unknown keys are rejected. Every missing value takes the default of the
//! 30x30 echo-chamber experiment:
//!
//! ```toml
//! runs = 1
//! master_seed = 0
//! sample_every = 50
//! # snapshot_every = 50
//! early_stop = false
//!
//! [topology]
//! kind = "lattice"          # or "barabasi-albert"
//! rows = 30
//! cols = 30
//! # n = 1000                # barabasi-albert only
//! # m = 4
//!
//! [game]
//! reward = 10.0             # paid to the global majority at the end
//! change_cost = 1.0
//! r_k = 1                   # radius of knowledge
//! r_i = 1                   # radius of influence
//! initial_budget = 0.0
//! num_opinions = 2
//! rounds = 50000            # one interaction per round
//! offer_amount = { A = 1.0 }  # unlisted opinions offer 1
//! debit_speaker = false
//! baseline = "listener-own-opinion"   # or "as-written"
//!
//! [scenario]
//! kind = "random-uniform"   # fractions | droplet | degree-preferential
//! fractions = { A = 0.5 }   # unlisted opinions split the remainder equally
//! droplet_fraction = 0.09
//! minority = "A"
//! majority = "B"
//! # committed = "A"
//!
//! [sweep]
//! param = "game.r_k"
//! values = [1, 2, 3, 4, 5]
//! # runs = 50              # defaults to the top-level runs
//! ```
//!
//! Overrides (`key.path=value`) are applied to the parsed document before
//! validation, so they go through exactly the same checks as the file.
//! Setting `scenario.fractions.X` rescales the other listed fractions so the
//! table still sums to one.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;
use toml::{Table, Value};

use crate::engine::{BaselineVariant, GameParams, OpinionId, MAX_OPINIONS};
use crate::graph::{Graph, GraphError};
use crate::scenarios::{validate_fractions, ScenarioKind, ScenarioSpec};
use crate::seeds::GameRng;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("bad override `{0}`: expected KEY=VALUE")]
    OverrideSyntax(String),
}

fn invalid(path: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologySpec {
    Lattice { rows: usize, cols: usize },
    BarabasiAlbert { n: usize, m: usize },
}

impl TopologySpec {
    pub fn node_count(&self) -> usize {
        match *self {
            TopologySpec::Lattice { rows, cols } => rows * cols,
            TopologySpec::BarabasiAlbert { n, .. } => n,
        }
    }

    /// Lattices are fixed; Barabási–Albert graphs are drawn per run.
    pub fn is_random(&self) -> bool {
        matches!(self, TopologySpec::BarabasiAlbert { .. })
    }

    pub fn build(&self, rng: &mut GameRng) -> Result<Graph, GraphError> {
        match *self {
            TopologySpec::Lattice { rows, cols } => Graph::lattice2d_pbc(rows, cols),
            TopologySpec::BarabasiAlbert { n, m } => Graph::barabasi_albert(n, m, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<Value>,
    pub runs: usize,
}

/// Renders a sweep value the way it appears in `sweep.csv`.
pub fn format_value(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub game: GameParams,
    pub scenario: ScenarioSpec,
    pub runs: usize,
    pub master_seed: u64,
    pub sample_every: u64,
    pub snapshot_every: Option<u64>,
    pub early_stop: bool,
    pub sweep: Option<SweepSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_table(Table::new()).expect("defaults are valid")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    topology: RawTopology,
    #[serde(default)]
    game: RawGame,
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default = "one")]
    runs: i64,
    #[serde(default)]
    master_seed: u64,
    #[serde(default = "fifty")]
    sample_every: i64,
    snapshot_every: Option<i64>,
    #[serde(default)]
    early_stop: bool,
    sweep: Option<RawSweep>,
}

fn one() -> i64 {
    1
}

fn fifty() -> i64 {
    50
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    kind: Option<String>,
    rows: Option<i64>,
    cols: Option<i64>,
    n: Option<i64>,
    m: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    reward: Option<f64>,
    change_cost: Option<f64>,
    r_k: Option<i64>,
    r_i: Option<i64>,
    initial_budget: Option<f64>,
    num_opinions: Option<i64>,
    rounds: Option<i64>,
    #[serde(default)]
    offer_amount: BTreeMap<String, f64>,
    debit_speaker: Option<bool>,
    baseline: Option<BaselineVariant>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: Option<String>,
    #[serde(default)]
    fractions: BTreeMap<String, f64>,
    droplet_fraction: Option<f64>,
    minority: Option<String>,
    majority: Option<String>,
    committed: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    param: String,
    values: Vec<Value>,
    runs: Option<i64>,
}

fn positive(path: &str, v: i64) -> Result<usize, ConfigError> {
    if v < 1 {
        Err(invalid(path, format!("must be >= 1 (got {v})")))
    } else {
        Ok(v as usize)
    }
}

fn opinion(path: &str, label: &str, k: usize) -> Result<OpinionId, ConfigError> {
    match OpinionId::parse(label) {
        Some(o) if o.index() < k => Ok(o),
        _ => Err(invalid(
            path,
            format!("`{label}` is not one of the {k} configured opinions"),
        )),
    }
}

/// Parses a TOML document.
pub fn parse_table(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn read_table(path: &Path) -> Result<Table, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_table(&text)
}

/// Interprets override text as a TOML value, falling back to a bare string.
pub fn parse_value(text: &str) -> Value {
    match format!("v = {text}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.to_string())),
        Err(_) => Value::String(text.to_string()),
    }
}

/// Sets `path` (dot-separated) in `table`, creating intermediate tables.
pub fn set_path(table: &mut Table, path: &str, value: Value) -> Result<(), ConfigError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(invalid(path, "empty key segment"));
    }
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut cursor = table;
    for (i, key) in parents.iter().enumerate() {
        let entry = cursor
            .entry(key.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| invalid(&keys[..=i].join("."), "is not a table"))?;
    }
    if let Some(Value::Table(_)) = cursor.get(*last) {
        return Err(invalid(path, "is a table, not a scalar field"));
    }
    let rescale = parents == ["scenario", "fractions"];
    cursor.insert(last.to_string(), value.clone());
    if rescale {
        rescale_fractions(cursor, last, &value, path)?;
    }
    Ok(())
}

fn rescale_fractions(fractions: &mut Table, pinned: &str, value: &Value, path: &str) -> Result<(), ConfigError> {
    let target = value
        .as_float()
        .or_else(|| value.as_integer().map(|i| i as f64))
        .ok_or_else(|| invalid(path, "must be a number"))?;
    let others: Vec<String> = fractions.keys().filter(|k| *k != pinned).cloned().collect();
    let rest: f64 = others
        .iter()
        .filter_map(|k| {
            fractions[k]
                .as_float()
                .or_else(|| fractions[k].as_integer().map(|i| i as f64))
        })
        .sum();
    if others.is_empty() || rest <= 0.0 {
        return Ok(());
    }
    let scale = (1.0 - target) / rest;
    for k in others {
        if let Some(x) = fractions[&k]
            .as_float()
            .or_else(|| fractions[&k].as_integer().map(|i| i as f64))
        {
            fractions.insert(k, Value::Float(x * scale));
        }
    }
    Ok(())
}

/// Applies `KEY=VALUE` overrides in order.
pub fn apply_overrides<S: AsRef<str>>(table: &mut Table, overrides: &[S]) -> Result<(), ConfigError> {
    for raw in overrides {
        let raw = raw.as_ref();
        let (key, value) = raw
            .split_once('=')
            .ok_or_else(|| ConfigError::OverrideSyntax(raw.to_string()))?;
        set_path(table, key.trim(), parse_value(value.trim()))?;
    }
    Ok(())
}

/// Reads, overrides and validates a config file.
pub fn load_config<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<ExperimentConfig, ConfigError> {
    let mut table = read_table(path)?;
    apply_overrides(&mut table, overrides)?;
    ExperimentConfig::from_table(table)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_table(parse_table(text)?)
    }

    pub fn from_table(table: Table) -> Result<ExperimentConfig, ConfigError> {
        let raw: RawConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
        validate(raw)
    }
}

fn validate(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let topology = match raw.topology.kind.as_deref().unwrap_or("lattice") {
        "lattice" => {
            if raw.topology.n.is_some() || raw.topology.m.is_some() {
                return Err(invalid("topology", "n and m only apply to barabasi-albert"));
            }
            let rows = raw.topology.rows.unwrap_or(30);
            let cols = raw.topology.cols.unwrap_or(30);
            for (p, v) in [("topology.rows", rows), ("topology.cols", cols)] {
                if v < 3 {
                    return Err(invalid(p, format!("must be >= 3 (got {v})")));
                }
            }
            TopologySpec::Lattice {
                rows: rows as usize,
                cols: cols as usize,
            }
        }
        "barabasi-albert" => {
            if raw.topology.rows.is_some() || raw.topology.cols.is_some() {
                return Err(invalid("topology", "rows and cols only apply to lattice"));
            }
            let n = positive("topology.n", raw.topology.n.unwrap_or(1000))?;
            let m = positive("topology.m", raw.topology.m.unwrap_or(4))?;
            if n <= m {
                return Err(invalid("topology.n", format!("must exceed m = {m} (got {n})")));
            }
            TopologySpec::BarabasiAlbert { n, m }
        }
        other => {
            return Err(invalid(
                "topology.kind",
                format!("unknown topology `{other}` (expected lattice or barabasi-albert)"),
            ))
        }
    };

    let g = &raw.game;
    let num_opinions = g.num_opinions.unwrap_or(2);
    if !(2..=MAX_OPINIONS as i64).contains(&num_opinions) {
        return Err(invalid(
            "game.num_opinions",
            format!("must be in 2..={MAX_OPINIONS} (got {num_opinions})"),
        ));
    }
    let k = num_opinions as usize;
    let mut offer_amounts = vec![1.0; k];
    for (label, &amount) in &g.offer_amount {
        let path = format!("game.offer_amount.{label}");
        let o = opinion(&path, label, k)?;
        if !(amount >= 0.0 && amount.is_finite()) {
            return Err(invalid(&path, format!("must be finite and >= 0 (got {amount})")));
        }
        offer_amounts[o.index()] = amount;
    }
    let reward = g.reward.unwrap_or(10.0);
    if !(reward >= 0.0 && reward.is_finite()) {
        return Err(invalid(
            "game.reward",
            format!("must be finite and >= 0 (got {reward})"),
        ));
    }
    let change_cost = g.change_cost.unwrap_or(1.0);
    if !change_cost.is_finite() {
        return Err(invalid(
            "game.change_cost",
            "must be finite (use scenario.committed for committed agents)",
        ));
    }
    let initial_budget = g.initial_budget.unwrap_or(0.0);
    if !initial_budget.is_finite() {
        return Err(invalid("game.initial_budget", "must be finite"));
    }
    let game = GameParams {
        reward,
        default_change_cost: change_cost,
        knowledge_radius: positive("game.r_k", g.r_k.unwrap_or(1))?,
        influence_radius: positive("game.r_i", g.r_i.unwrap_or(1))?,
        offer_amounts,
        initial_budget,
        num_opinions: k,
        rounds: positive("game.rounds", g.rounds.unwrap_or(50_000))? as u64,
        debit_speaker: g.debit_speaker.unwrap_or(false),
        baseline: g.baseline.unwrap_or_default(),
    };

    let s = &raw.scenario;
    let fractions = || -> Result<Vec<f64>, ConfigError> {
        let mut out = vec![None; k];
        for (label, &f) in &s.fractions {
            let path = format!("scenario.fractions.{label}");
            let o = opinion(&path, label, k)?;
            if !(f >= 0.0 && f.is_finite()) {
                return Err(invalid(&path, format!("must be finite and >= 0 (got {f})")));
            }
            out[o.index()] = Some(f);
        }
        let given: f64 = out.iter().flatten().sum();
        let missing = out.iter().filter(|f| f.is_none()).count();
        let fill = if missing > 0 {
            ((1.0 - given) / missing as f64).max(0.0)
        } else {
            0.0
        };
        let out: Vec<f64> = out.into_iter().map(|f| f.unwrap_or(fill)).collect();
        validate_fractions(&out).map_err(|e| invalid("scenario.fractions", e.to_string()))?;
        Ok(out)
    };
    let kind = match s.kind.as_deref().unwrap_or("random-uniform") {
        "random-uniform" => ScenarioKind::RandomUniform,
        "fractions" => ScenarioKind::Fractions(fractions()?),
        "droplet" => {
            if !matches!(topology, TopologySpec::Lattice { .. }) {
                return Err(invalid("scenario.kind", "droplet requires a lattice topology"));
            }
            let fraction = s.droplet_fraction.unwrap_or(0.09);
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(invalid(
                    "scenario.droplet_fraction",
                    format!("must lie strictly between 0 and 1 (got {fraction})"),
                ));
            }
            let minority = opinion("scenario.minority", s.minority.as_deref().unwrap_or("A"), k)?;
            let majority = opinion("scenario.majority", s.majority.as_deref().unwrap_or("B"), k)?;
            if minority == majority {
                return Err(invalid("scenario.majority", "must differ from the minority opinion"));
            }
            ScenarioKind::Droplet {
                fraction,
                minority,
                majority,
            }
        }
        "degree-preferential" => {
            if k != 2 {
                return Err(invalid(
                    "scenario.kind",
                    "degree-preferential assigns two opinions; set game.num_opinions = 2",
                ));
            }
            ScenarioKind::DegreePreferential {
                fraction_a: fractions()?[0],
            }
        }
        other => {
            return Err(invalid(
                "scenario.kind",
                format!(
                    "unknown scenario `{other}` (expected random-uniform, fractions, droplet or degree-preferential)"
                ),
            ))
        }
    };
    let committed = s
        .committed
        .as_deref()
        .map(|label| opinion("scenario.committed", label, k))
        .transpose()?;
    let scenario = ScenarioSpec { kind, committed };

    let runs = positive("runs", raw.runs)?;
    let sample_every = positive("sample_every", raw.sample_every)? as u64;
    let snapshot_every = raw
        .snapshot_every
        .map(|v| positive("snapshot_every", v).map(|v| v as u64))
        .transpose()?;
    let sweep = raw
        .sweep
        .map(|sw| -> Result<SweepSpec, ConfigError> {
            if sw.values.is_empty() {
                return Err(invalid("sweep.values", "must list at least one value"));
            }
            Ok(SweepSpec {
                param: sw.param,
                values: sw.values,
                runs: sw.runs.map(|r| positive("sweep.runs", r)).transpose()?.unwrap_or(runs),
            })
        })
        .transpose()?;

    Ok(ExperimentConfig {
        topology,
        game,
        scenario,
        runs,
        master_seed: raw.master_seed,
        sample_every,
        snapshot_every,
        early_stop: raw.early_stop,
        sweep,
    })
}
