mod plot;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use influence_core::experiments::config::{apply_overrides, parse_value, read_table};
use influence_core::experiments::output::{
    write_snapshots, write_summary_csv, write_sweep_csv, write_sweep_runs_csv, write_timeseries_csv, OutputError,
};
use influence_core::experiments::{
    run_batch, sweep_with_progress, BatchResult, ConfigError, ExperimentConfig, ExperimentError, SweepSpec,
    TopologySpec,
};
use influence_core::graph::GraphKind;
use influence_core::seeds::{derive_run_seeds, rng_from_seed};
use thiserror::Error;

use crate::plot::{parse_filter, read_series, render_svg, PlotError, PlotSpec};

/// Simulator for the resource-mediated influence game.
#[derive(Debug, Parser)]
#[command(name = "influence", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a batch of games and write summary.csv, timeseries.csv and snapshots.
    Run(ExperimentArgs),
    /// Sweep one parameter and write sweep.csv and sweep_runs.csv.
    Sweep {
        #[command(flatten)]
        common: ExperimentArgs,
        /// Dotted config path to sweep, e.g. game.r_k.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values for --param.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Render an SVG line chart from CSV columns.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        /// One or more y columns, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long)]
        output: PathBuf,
        /// Draw one line per distinct value of this column.
        #[arg(long)]
        group: Option<String>,
        /// Keep only rows where COLUMN=VALUE (repeatable).
        #[arg(long = "where", value_name = "COLUMN=VALUE")]
        filters: Vec<String>,
        #[arg(long)]
        title: Option<String>,
    },
    /// Write the edge list of the configured graph (run 0's graph for
    /// Barabási–Albert).
    GraphDump {
        #[command(flatten)]
        common: ExperimentArgs,
    },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value (repeatable), e.g. --set game.r_k=2.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (a file path for graph-dump; stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; same as --set master_seed=N.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per batch or per sweep value.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Experiment(e) => match e {
                ExperimentError::Config(_)
                | ExperimentError::SweepParam { .. }
                | ExperimentError::NoSweep
                | ExperimentError::Scenario(_)
                | ExperimentError::Graph(_)
                | ExperimentError::Engine(_) => 1,
            },
            CliError::Plot(PlotError::Read { .. }) => 2,
            CliError::Plot(_) => 1,
            CliError::Output(_) | CliError::Io { .. } => 2,
        }
    }
}

impl ExperimentArgs {
    /// The config document with `--seed`, `--runs` and `--set` applied.
    fn table(&self) -> Result<toml::Table, CliError> {
        let mut table = match &self.config {
            Some(path) => read_table(path)?,
            None => toml::Table::new(),
        };
        let mut overrides = Vec::new();
        if let Some(seed) = self.seed {
            overrides.push(format!("master_seed={seed}"));
        }
        if let Some(runs) = self.runs {
            overrides.push(format!("runs={runs}"));
        }
        overrides.extend(self.overrides.iter().cloned());
        apply_overrides(&mut table, &overrides)?;
        Ok(table)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn graph_kind(topology: TopologySpec) -> GraphKind {
    match topology {
        TopologySpec::Lattice { rows, cols } => GraphKind::Lattice2dPbc { rows, cols },
        TopologySpec::BarabasiAlbert { m, .. } => GraphKind::BarabasiAlbert { m },
    }
}

fn verdict(batch: &BatchResult) -> String {
    let runs = batch.runs.len();
    if let [only] = batch.runs.as_slice() {
        let s = &only.summary;
        return match (s.winner, s.t_absorb) {
            (Some(w), Some(t)) => format!("absorbed: winner={} t={t}", w.letter()),
            _ => {
                let p: Vec<String> = s.final_fractions.iter().map(|p| format!("{p:.3}")).collect();
                format!(
                    "not absorbed after {} rounds: fractions {}",
                    s.rounds_played,
                    p.join(" ")
                )
            }
        };
    }
    let absorbed: Vec<_> = batch.summaries().filter(|s| s.absorbed).collect();
    let mut line = format!("{}/{runs} runs absorbed", absorbed.len());
    if !absorbed.is_empty() {
        let mut wins = vec![0; batch.num_opinions];
        for s in &absorbed {
            if let Some(w) = s.winner {
                wins[w.index()] += 1;
            }
        }
        let wins: Vec<String> = wins
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, c)| format!("{}={c}", influence_core::engine::OpinionId(k as u8).letter()))
            .collect();
        let mean_t = absorbed.iter().filter_map(|s| s.t_absorb).sum::<u64>() as f64 / absorbed.len() as f64;
        line.push_str(&format!(" (winners {}; mean t={mean_t:.0})", wins.join(" ")));
    }
    line
}

fn cmd_run(args: &ExperimentArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::from_table(args.table()?)?;
    let batch = run_batch(&config)?;
    let out = args.out_dir();
    write_summary_csv(&batch, &out.join("summary.csv"))?;
    write_timeseries_csv(&batch, &out.join("timeseries.csv"))?;
    if config.snapshot_every.is_some() {
        let written = write_snapshots(
            &batch,
            graph_kind(config.topology),
            config.game.rounds,
            &out.join("snapshots"),
        )?;
        log::info!("wrote {} snapshot files", written.len());
    }
    println!("{}", verdict(&batch));
    Ok(())
}

fn cmd_sweep(args: &ExperimentArgs, param: Option<&str>, values: &[String]) -> Result<(), CliError> {
    let table = args.table()?;
    let config = ExperimentConfig::from_table(table.clone())?;
    let mut spec = match (param, config.sweep) {
        (Some(p), from_file) => SweepSpec {
            param: p.to_string(),
            runs: from_file.as_ref().map_or(config.runs, |s| s.runs),
            // The file's values only make sense for the file's parameter.
            values: from_file.filter(|s| s.param == p).map(|s| s.values).unwrap_or_default(),
        },
        (None, Some(s)) => s,
        (None, None) => return Err(ExperimentError::NoSweep.into()),
    };
    if !values.is_empty() {
        spec.values = values.iter().map(|v| parse_value(v.trim())).collect();
    }
    if spec.values.is_empty() {
        return Err(ConfigError::Invalid {
            path: "sweep.values".into(),
            msg: "no values to sweep (pass --values)".into(),
        }
        .into());
    }
    if let Some(runs) = args.runs {
        spec.runs = runs;
    }
    let total = spec.values.len();
    let mut done = 0;
    let sweep = sweep_with_progress(&table, &spec, |row| {
        done += 1;
        println!(
            "[{done}/{total}] {}={}: not absorbed {:.3}, mean p_A {:.3}",
            spec.param, row.value, row.frac_not_absorbed, row.mean_final_p_a
        );
    })?;
    let out = args.out_dir();
    write_sweep_csv(&sweep, &out.join("sweep.csv"))?;
    write_sweep_runs_csv(&sweep, &out.join("sweep_runs.csv"))?;
    Ok(())
}

fn cmd_graph_dump(args: &ExperimentArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::from_table(args.table()?)?;
    let seed = derive_run_seeds(config.master_seed, 1)[0];
    let graph = config
        .topology
        .build(&mut rng_from_seed(seed))
        .map_err(ExperimentError::from)?;
    match &args.out {
        Some(path) => {
            let io_err = |source| CliError::Io {
                path: path.display().to_string(),
                source,
            };
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(io_err)?;
            }
            let mut file = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
            graph
                .write_edge_list(&mut file)
                .and_then(|_| file.flush())
                .map_err(io_err)
        }
        None => match graph.write_edge_list(io::stdout().lock()) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(CliError::Io {
                path: "<stdout>".into(),
                source: e,
            }),
            _ => Ok(()),
        },
    }
}

fn cmd_plot(input: &Path, output: &Path, spec: &PlotSpec) -> Result<(), CliError> {
    let series = read_series(input, spec)?;
    let svg = render_svg(&series, spec);
    let io_err = |source| CliError::Io {
        path: output.display().to_string(),
        source,
    };
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    fs::write(output, svg).map_err(io_err)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep { common, param, values } => cmd_sweep(&common, param.as_deref(), &values),
        Command::GraphDump { common } => cmd_graph_dump(&common),
        Command::Plot {
            input,
            x,
            y,
            output,
            group,
            filters,
            title,
        } => {
            let filters = filters.iter().map(|f| parse_filter(f)).collect::<Result<_, _>>()?;
            let spec = PlotSpec {
                x,
                ys: y,
                group,
                filters,
                title,
            };
            cmd_plot(&input, &output, &spec)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
