//! CSV and snapshot writers. All output uses LF line endings, `.` as the
//! decimal separator and six decimals for fractions and means.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{BatchResult, SweepTable};
use crate::engine::{OpinionId, Snapshot};
use crate::graph::GraphKind;
use crate::metrics::RunSummary;

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn with_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), OutputError> {
    let wrap = |source| OutputError {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    body(&mut out).and_then(|_| out.flush()).map_err(wrap)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_header(num_opinions: usize) -> String {
    let mut h = String::from("run_id,seed,absorbed,winner,t_absorb");
    for k in 0..num_opinions {
        write!(h, ",final_p_{k}").unwrap();
    }
    for k in 0..num_opinions {
        write!(h, ",components_{k}").unwrap();
    }
    h.push_str(",flips_homophily,flips_influence");
    h
}

pub fn summary_row(run_id: usize, s: &RunSummary) -> String {
    let mut row = format!(
        "{run_id},{},{},{},{}",
        s.seed,
        s.absorbed,
        opt(s.winner),
        opt(s.t_absorb)
    );
    for p in &s.final_fractions {
        write!(row, ",{p:.6}").unwrap();
    }
    for c in &s.final_components {
        write!(row, ",{c}").unwrap();
    }
    write!(row, ",{},{}", s.flips_homophily, s.flips_influence).unwrap();
    row
}

pub fn write_summary<W: Write>(batch: &BatchResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", summary_header(batch.num_opinions))?;
    for r in &batch.runs {
        writeln!(out, "{}", summary_row(r.run_id, &r.summary))?;
    }
    Ok(())
}

pub fn write_timeseries<W: Write>(batch: &BatchResult, mut out: W) -> io::Result<()> {
    writeln!(out, "run_id,t,opinion,fraction,components")?;
    for r in &batch.runs {
        for s in &r.samples {
            for (k, (p, c)) in s.fractions.iter().zip(&s.components).enumerate() {
                writeln!(out, "{},{},{k},{p:.6},{c}", r.run_id, s.round)?;
            }
        }
    }
    Ok(())
}

pub fn write_sweep<W: Write>(table: &SweepTable, mut out: W) -> io::Result<()> {
    writeln!(out, "param,value,runs,frac_not_absorbed,mean_final_p_A,mean_t_absorb")?;
    for row in &table.rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{}",
            table.param,
            row.value,
            row.runs,
            row.frac_not_absorbed,
            row.mean_final_p_a,
            opt(row.mean_t_absorb.map(|t| format!("{t:.6}")))
        )?;
    }
    Ok(())
}

/// Per-run rows of a sweep: the summary schema prefixed by the swept value.
pub fn write_sweep_runs<W: Write>(table: &SweepTable, mut out: W) -> io::Result<()> {
    writeln!(out, "value,{}", summary_header(table.num_opinions))?;
    for row in &table.rows {
        for (i, s) in row.summaries.iter().enumerate() {
            writeln!(out, "{},{}", row.value, summary_row(i, s))?;
        }
    }
    Ok(())
}

pub fn write_summary_csv(batch: &BatchResult, path: &Path) -> Result<(), OutputError> {
    with_file(path, |out| write_summary(batch, out))
}

pub fn write_timeseries_csv(batch: &BatchResult, path: &Path) -> Result<(), OutputError> {
    with_file(path, |out| write_timeseries(batch, out))
}

pub fn write_sweep_csv(table: &SweepTable, path: &Path) -> Result<(), OutputError> {
    with_file(path, |out| write_sweep(table, out))
}

pub fn write_sweep_runs_csv(table: &SweepTable, path: &Path) -> Result<(), OutputError> {
    with_file(path, |out| write_sweep_runs(table, out))
}

/// Lattices: a `# t=.. rows=.. cols=..` header and one comma-separated row of
/// opinion ids per lattice row. Other graphs: `# t=.. nodes=..` and one
/// `node_id,opinion` line per node.
pub fn write_snapshot<W: Write>(snapshot: &Snapshot, kind: GraphKind, mut out: W) -> io::Result<()> {
    let ids = |ops: &[OpinionId]| ops.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",");
    match kind {
        GraphKind::Lattice2dPbc { rows, cols } => {
            writeln!(out, "# t={} rows={rows} cols={cols}", snapshot.round)?;
            for r in 0..rows {
                writeln!(out, "{}", ids(&snapshot.opinions[r * cols..(r + 1) * cols]))?;
            }
        }
        _ => {
            writeln!(out, "# t={} nodes={}", snapshot.round, snapshot.opinions.len())?;
            for (v, o) in snapshot.opinions.iter().enumerate() {
                writeln!(out, "{v},{o}")?;
            }
        }
    }
    Ok(())
}

/// `run<id>_t<round>.txt`, with the round zero-padded to the width of
/// `max_round` so that lexical order is temporal order.
pub fn snapshot_file_name(run_id: usize, round: u64, max_round: u64) -> String {
    let width = max_round.to_string().len();
    format!("run{run_id:03}_t{round:0width$}.txt")
}

/// Writes every snapshot of every run into `dir`; returns the paths written.
pub fn write_snapshots(
    batch: &BatchResult,
    kind: GraphKind,
    max_round: u64,
    dir: &Path,
) -> Result<Vec<PathBuf>, OutputError> {
    let mut written = Vec::new();
    for r in &batch.runs {
        for s in &r.snapshots {
            let path = dir.join(snapshot_file_name(r.run_id, s.round, max_round));
            with_file(&path, |out| write_snapshot(s, kind, out))?;
            written.push(path);
        }
    }
    Ok(written)
}
