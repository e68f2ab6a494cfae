//! Writers for run artifacts: CSV tables, JSON summaries and two-column
//! plot data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::identities::IdentityReport;
use crate::quasimodes::ScanTable;
use crate::spectral::SpectrumReport;

pub const IDENTITIES_JSON: &str = "identities.json";
pub const IDENTITIES_CSV: &str = "identities.csv";
pub const SCAN_CSV: &str = "quasimode_scan.csv";
pub const SCAN_JSON: &str = "quasimode_slopes.json";
pub const SPECTRUM_JSON: &str = "spectrum.json";
pub const EIGENVALUES_CSV: &str = "eigenvalues.csv";
pub const HISTOGRAM_DAT: &str = "eigenvalue_histogram.dat";
pub const CONFIG_SNAPSHOT: &str = "config.toml";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

/// Whitespace-separated two-column data.
pub fn write_plot(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for (x, y) in rows {
        writeln!(f, "{x:.12e} {y:.12e}")?;
    }
    Ok(())
}

/// One row per `(check, h)`.
pub fn write_identities(dir: &Path, reports: &[IdentityReport]) -> Result<Vec<PathBuf>> {
    let json = dir.join(IDENTITIES_JSON);
    write_json(&json, &reports)?;
    let csv_path = dir.join(IDENTITIES_CSV);
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["check", "h", "residual", "fitted_order", "pass"])?;
    for r in reports {
        for (h, res) in &r.residuals {
            w.write_record([
                r.name.clone(),
                format!("{h:.12e}"),
                format!("{res:.12e}"),
                format!("{:.6}", r.fitted_order),
                r.pass.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(vec![json, csv_path])
}

fn plot_name(lambda: f64) -> String {
    format!("quasimode_ratio_lambda_{lambda}.dat")
}

/// Scan CSV, slope JSON and one `(ln R, ln ratio)` file per `λ`.
pub fn write_scan(dir: &Path, table: &ScanTable) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join(SCAN_CSV);
    let mut w = csv::Writer::from_path(&csv_path)?;
    for row in &table.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let json = dir.join(SCAN_JSON);
    write_json(&json, &table)?;
    let mut out = vec![csv_path, json];
    for s in &table.slopes {
        let rows: Vec<(f64, f64)> = table
            .rows
            .iter()
            .filter(|r| r.lambda == s.lambda)
            .map(|r| (r.r_scale.ln(), r.ratio.ln()))
            .collect();
        let p = dir.join(plot_name(s.lambda));
        write_plot(&p, &rows)?;
        out.push(p);
    }
    Ok(out)
}

/// Report JSON, per-mode eigenvalue CSV and a histogram of the listed
/// eigenvalues of the first configuration (bin centre, count).
pub fn write_spectrum(dir: &Path, rep: &SpectrumReport) -> Result<Vec<PathBuf>> {
    let json = dir.join(SPECTRUM_JSON);
    write_json(&json, rep)?;
    let csv_path = dir.join(EIGENVALUES_CSV);
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["t_max", "n_t", "m", "index", "eigenvalue"])?;
    for cfg in &rep.blocks {
        for b in cfg {
            for (k, v) in b.low.iter().enumerate() {
                w.write_record([
                    b.t_max.to_string(),
                    b.n_t.to_string(),
                    b.m.to_string(),
                    k.to_string(),
                    format!("{v:.12e}"),
                ])?;
            }
        }
    }
    w.flush()?;
    let hist = dir.join(HISTOGRAM_DAT);
    let (lo, hi, bins) = (-2.5, crate::spectral::LIST_BELOW, 70usize);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    if let Some(first) = rep.blocks.first() {
        for v in first.iter().flat_map(|b| b.low.iter()) {
            let k = ((v - lo) / width).floor();
            if k >= 0.0 && (k as usize) < bins {
                counts[k as usize] += 1;
            }
        }
    }
    let rows: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (lo + (k as f64 + 0.5) * width, c as f64))
        .collect();
    write_plot(&hist, &rows)?;
    Ok(vec![json, csv_path, hist])
}

/// One line of a run summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryLine {
    pub source: String,
    pub item: String,
    pub pass: bool,
}

fn read_json(path: &Path) -> Result<Option<serde_json::Value>> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Collect pass/fail lines from whatever artifacts exist in `dir`.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryLine>> {
    let mut out = Vec::new();
    let str_of = |v: &serde_json::Value, k: &str| v.get(k).map(|x| x.to_string().trim_matches('"').to_string());
    if let Some(v) = read_json(&dir.join(IDENTITIES_JSON))? {
        for r in v.as_array().into_iter().flatten() {
            out.push(SummaryLine {
                source: IDENTITIES_JSON.into(),
                item: str_of(r, "name").unwrap_or_default(),
                pass: r.get("pass").and_then(|p| p.as_bool()).unwrap_or(false),
            });
        }
    }
    if let Some(v) = read_json(&dir.join(SCAN_JSON))? {
        for s in v.get("slopes").and_then(|s| s.as_array()).into_iter().flatten() {
            let slope = s.get("ratio_slope").and_then(|x| x.as_f64()).unwrap_or(f64::NAN);
            let thr = v.get("slope_threshold").and_then(|x| x.as_f64()).unwrap_or(f64::NAN);
            out.push(SummaryLine {
                source: SCAN_JSON.into(),
                item: format!("lambda {} ratio slope {slope:.3}", str_of(s, "lambda").unwrap_or_default()),
                pass: slope <= thr,
            });
        }
    }
    if let Some(v) = read_json(&dir.join(SPECTRUM_JSON))? {
        for s in v.get("verdicts").and_then(|s| s.as_array()).into_iter().flatten() {
            let status = str_of(s, "status").unwrap_or_default();
            out.push(SummaryLine {
                source: SPECTRUM_JSON.into(),
                item: format!("{} [{status}]", str_of(s, "claim").unwrap_or_default()),
                pass: status != "fail",
            });
        }
    }
    Ok(out)
}
