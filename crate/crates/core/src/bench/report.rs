use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::SolverKind;
use super::runner::{gamma_star, RunRecord, RunStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Svg,
    #[default]
    All,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            "all" => Ok(Self::All),
            _ => Err(Error::InvalidArgument(format!("unknown format {s:?}; expected csv, svg or all"))),
        }
    }
}

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

pub fn write_records_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Means over the `ok` repetitions of one `(solver, γ, accuracy)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub manifest_id: String,
    pub solver: SolverKind,
    pub gamma: f64,
    pub accuracy: f64,
    pub runs: usize,
    pub ok_runs: usize,
    pub mean_iterations: f64,
    pub mean_oracle_calls: f64,
    pub mean_wall_seconds: f64,
}

pub fn summarize(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(SolverKind, u64, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.solver, r.gamma.to_bits(), r.accuracy.to_bits())).or_default().push(r);
    }
    let mut out: Vec<CellSummary> = cells
        .into_values()
        .map(|rs| {
            let ok: Vec<_> = rs.iter().filter(|r| r.status == RunStatus::Ok).collect();
            let n = ok.len() as f64;
            let mean = |f: &dyn Fn(&RunRecord) -> f64| if ok.is_empty() { f64::NAN } else { ok.iter().map(|r| f(r)).sum::<f64>() / n };
            CellSummary {
                manifest_id: rs[0].manifest_id.clone(),
                solver: rs[0].solver,
                gamma: rs[0].gamma,
                accuracy: rs[0].accuracy,
                runs: rs.len(),
                ok_runs: ok.len(),
                mean_iterations: mean(&|r| r.iterations as f64),
                mean_oracle_calls: mean(&|r| r.oracle_calls as f64),
                mean_wall_seconds: mean(&|r| r.wall_nanos as f64 * 1e-9),
            }
        })
        .collect();
    out.sort_by(|a, b| a.solver.cmp(&b.solver).then(a.gamma.total_cmp(&b.gamma)).then(a.accuracy.total_cmp(&b.accuracy)));
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 140.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"];

/// A logarithmic axis mapped onto `[start, start + length]` pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAxis {
    pub log_min: f64,
    pub log_max: f64,
    pub start: f64,
    pub length: f64,
}

impl LogAxis {
    fn spanning(values: impl Iterator<Item = f64>, start: f64, length: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.log10()), hi.max(v.log10())));
        if !lo.is_finite() {
            (lo, hi) = (-1.0, 1.0);
        }
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { log_min: lo, log_max: hi, start, length }
    }

    pub fn position(&self, v: f64) -> f64 {
        self.start + (v.log10() - self.log_min) / (self.log_max - self.log_min) * self.length
    }

    pub fn value(&self, pos: f64) -> f64 {
        10f64.powf(self.log_min + (pos - self.start) / self.length * (self.log_max - self.log_min))
    }
}

/// Mean wall time against γ, one line per solver, with a vertical marker
/// at `γ* = accuracy / (4 ln p)`.
pub fn render_chart(summaries: &[CellSummary], p: usize, accuracy: f64) -> Result<String> {
    let rows: Vec<&CellSummary> =
        summaries.iter().filter(|s| s.accuracy == accuracy && s.mean_wall_seconds.is_finite() && s.mean_wall_seconds > 0.0).collect();
    let g_star = gamma_star(p, accuracy)?;
    let x = LogAxis::spanning(rows.iter().map(|s| s.gamma).chain([g_star]), LEFT, WIDTH - LEFT - RIGHT);
    let ylen = HEIGHT - TOP - BOTTOM;
    let y = LogAxis::spanning(rows.iter().map(|s| s.mean_wall_seconds), 0.0, ylen);
    let py = |v: f64| TOP + ylen - y.position(v);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-p="{p}" data-accuracy="{accuracy}" data-x-log-min="{}" data-x-log-max="{}" data-plot-left="{LEFT}" data-plot-width="{}">"#,
        x.log_min,
        x.log_max,
        x.length
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">mean wall time vs gamma (p = {p}, accuracy = {accuracy})</text>"#,
        LEFT + x.length / 2.0
    );
    let (x0, x1, y0, y1) = (LEFT, LEFT + x.length, TOP, TOP + ylen);
    let _ = writeln!(svg, r#"<path d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" fill="none" stroke="black"/>"#);
    for (val, label) in [(10f64.powf(x.log_min), "min"), (10f64.powf(x.log_max), "max")] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle" class="x-{label}">{val:.3e}</text>"#,
            x.position(val),
            y1 + 16.0
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">gamma (log scale)</text>"#, LEFT + x.length / 2.0, HEIGHT - 10.0);
    for (val, pos) in [(10f64.powf(y.log_min), y1), (10f64.powf(y.log_max), y0)] {
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{val:.2e} s</text>"#, x0 - 4.0, pos + 4.0);
    }

    let gx = x.position(g_star);
    let _ = writeln!(
        svg,
        r##"<line class="gamma-star" data-gamma-star="{g_star}" x1="{gx:.4}" y1="{y0}" x2="{gx:.4}" y2="{y1}" stroke="#555" stroke-dasharray="4 3"/>"##
    );
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11">gamma* = {g_star:.4e}</text>"#, gx + 3.0, y0 + 12.0);

    let mut by_solver: BTreeMap<SolverKind, Vec<&CellSummary>> = BTreeMap::new();
    for s in rows {
        by_solver.entry(s.solver).or_default().push(s);
    }
    for (i, (solver, mut pts)) in by_solver.into_iter().enumerate() {
        pts.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|s| format!("{:.2},{:.2}", x.position(s.gamma), py(s.mean_wall_seconds))).collect();
        let _ = writeln!(svg, r#"<polyline class="series" data-solver="{solver}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, coords.join(" "));
        for s in &pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" data-solver="{solver}" data-gamma="{}" data-seconds="{}"/>"#,
                x.position(s.gamma),
                py(s.mean_wall_seconds),
                s.gamma,
                s.mean_wall_seconds
            );
        }
        let ly = TOP + 16.0 * i as f64;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, x1 + 12.0, x1 + 32.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{solver}</text>"#, x1 + 36.0, ly + 4.0);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes `records.csv` and `summary.csv` (csv) and one chart per accuracy
/// (svg) into `dir`, returning the paths written.
pub fn emit_outputs(records: &[RunRecord], p: usize, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to emit".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let summaries = summarize(records);
    if matches!(format, OutputFormat::Csv | OutputFormat::All) {
        let path = dir.join(RECORDS_FILE);
        write_records_csv(&path, records)?;
        written.push(path);
        let path = dir.join(SUMMARY_FILE);
        let mut w = csv::Writer::from_path(&path)?;
        for s in &summaries {
            w.serialize(s)?;
        }
        w.flush()?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Svg | OutputFormat::All) {
        let mut accuracies: Vec<f64> = records.iter().map(|r| r.accuracy).collect();
        accuracies.sort_by(f64::total_cmp);
        accuracies.dedup();
        for acc in accuracies {
            let path = dir.join(format!("walltime_p{p}_acc{acc}.svg"));
            fs::write(&path, render_chart(&summaries, p, acc)?)?;
            written.push(path);
        }
    }
    Ok(written)
}
