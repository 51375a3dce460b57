//! Minimal SVG line charts from CSV columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: csv::Error },
    #[error("{path}: no column named `{column}` (have: {available})")]
    MissingColumn {
        path: String,
        column: String,
        available: String,
    },
    #[error("bad filter `{0}`: expected COLUMN=VALUE")]
    Filter(String),
}

#[derive(Debug, Clone, Default)]
pub struct PlotSpec {
    pub x: String,
    pub ys: Vec<String>,
    /// Split each y column into one series per distinct value of this column.
    pub group: Option<String>,
    /// Keep only rows where COLUMN equals VALUE.
    pub filters: Vec<(String, String)>,
    pub title: Option<String>,
}

pub fn parse_filter(text: &str) -> Result<(String, String), PlotError> {
    match text.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(PlotError::Filter(text.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Reads the requested series. Cells that do not parse as numbers (such as
/// the empty `mean_t_absorb` of a row with no absorbed runs) are skipped.
pub fn read_series(path: &Path, spec: &PlotSpec) -> Result<Vec<Series>, PlotError> {
    let shown = path.display().to_string();
    let read_err = |source| PlotError::Read {
        path: shown.clone(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(read_err)?;
    let headers = reader.headers().map_err(read_err)?.clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| PlotError::MissingColumn {
                path: shown.clone(),
                column: name.to_string(),
                available: headers.iter().collect::<Vec<_>>().join(","),
            })
    };
    let x = index(&spec.x)?;
    let ys = spec.ys.iter().map(|y| index(y)).collect::<Result<Vec<_>, _>>()?;
    let group = spec.group.as_deref().map(index).transpose()?;
    let filters = spec
        .filters
        .iter()
        .map(|(k, v)| Ok((index(k)?, v.as_str())))
        .collect::<Result<Vec<_>, PlotError>>()?;

    // Keyed by (y position, group value) so that legend order is stable.
    let mut series: BTreeMap<(usize, String), Vec<(f64, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(read_err)?;
        if filters.iter().any(|&(i, v)| record.get(i) != Some(v)) {
            continue;
        }
        let Some(xv) = record.get(x).and_then(|s| s.parse::<f64>().ok()) else {
            continue;
        };
        let g = group.and_then(|i| record.get(i)).unwrap_or("").to_string();
        for (k, &yi) in ys.iter().enumerate() {
            let entry = series.entry((k, g.clone())).or_default();
            if let Some(yv) = record.get(yi).and_then(|s| s.parse::<f64>().ok()) {
                entry.push((xv, yv));
            }
        }
    }
    let mut out: Vec<Series> = series
        .into_iter()
        .map(|((k, g), points)| Series {
            label: match &spec.group {
                Some(name) => format!("{} {name}={g}", spec.ys[k]),
                None => spec.ys[k].clone(),
            },
            points,
        })
        .collect();
    // Group values sort numerically when they are numbers.
    if spec.group.is_some() {
        out.sort_by(|a, b| {
            let key = |s: &Series| s.label.rsplit('=').next().and_then(|v| v.parse::<f64>().ok());
            match (key(a), key(b)) {
                (Some(x), Some(y)) => x.total_cmp(&y),
                _ => a.label.cmp(&b.label),
            }
        });
    }
    Ok(out)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round tick spacing (1, 2 or 5 times a power of ten) giving about
/// `target` intervals.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * magnitude);
    step
}

/// Padded data range with tick positions that cover it.
fn axis(values: impl Iterator<Item = f64>) -> (f64, f64, Vec<f64>) {
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    } else if lo == hi {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let step = tick_step(hi - lo, 5.0);
    let lo = (lo / step).floor() * step;
    let hi = (hi / step).ceil() * step;
    let count = ((hi - lo) / step).round() as usize;
    let ticks = (0..=count).map(|i| lo + i as f64 * step).collect();
    (lo, hi, ticks)
}

fn label(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

pub fn render_svg(series: &[Series], spec: &PlotSpec) -> String {
    let (x0, x1, xticks) = axis(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1, yticks) = axis(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    if let Some(title) = &spec.title {
        writeln!(
            w,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(title)
        )
        .unwrap();
    }

    writeln!(w, r##"<g class="axes" stroke="#333" fill="none">"##).unwrap();
    writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}"/>"#).unwrap();
    for &t in &xticks {
        let x = sx(t);
        writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0
        )
        .unwrap();
    }
    for &t in &yticks {
        let y = sy(t);
        writeln!(
            w,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}"/>"#,
            LEFT - 5.0
        )
        .unwrap();
    }
    writeln!(w, "</g>").unwrap();

    writeln!(w, r##"<g class="ticks" fill="#333">"##).unwrap();
    for &t in &xticks {
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(t),
            TOP + plot_h + 20.0,
            label(t)
        )
        .unwrap();
    }
    for &t in &yticks {
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            sy(t) + 4.0,
            label(t)
        )
        .unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x)
    )
    .unwrap();
    let ylabel = escape(&spec.ys.join(", "));
    writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{ylabel}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();

    writeln!(w, r#"<g class="series" fill="none" stroke-width="1.5">"#).unwrap();
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(w, r#"<polyline stroke="{color}" points="{}"/>"#, points.join(" ")).unwrap();
    }
    writeln!(w, "</g>").unwrap();

    writeln!(w, r#"<g class="legend">"#).unwrap();
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 10.0 + i as f64 * 18.0;
        let x = LEFT + plot_w + 15.0;
        writeln!(
            w,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
            x + 20.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<text x="{}" y="{}">{}</text>"#,
            x + 26.0,
            y + 4.0,
            escape(&s.label)
        )
        .unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(w, "</svg>").unwrap();
    svg
}
