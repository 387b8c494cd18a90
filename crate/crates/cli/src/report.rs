//! Report serialization: CSV rows, a JSON mirror with config and summary,
//! and the re-verification path that recomputes the empirical probability
//! from a written CSV.
//!
//! Files are byte-stable: floats are printed with 17 significant digits
//! (`{:.16e}`), which round-trips every f64 exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::experiment::{ExperimentConfig, ExperimentError};

pub const CSV_HEADER: &str =
    "k,f_gap,lhs_avg,bound_free,bound_det,bound_prob,eps_g,eps_h,primal_res,dual_res";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: usize,
    pub f_gap: f64,
    pub lhs_avg: f64,
    pub bound_free: f64,
    pub bound_det: f64,
    pub bound_prob: f64,
    pub eps_g: f64,
    pub eps_h: f64,
    pub primal_res: f64,
    pub dual_res: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub gamma: f64,
    /// `null` for an empty run.
    pub p_empirical: Option<f64>,
    pub p_lower_4: f64,
    pub p_lower_2: f64,
    pub eps0: f64,
    pub d0: f64,
    pub f_star: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(report: &RunReport) -> String {
    let mut out = String::with_capacity(128 * (report.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            fmt_f(r.f_gap),
            fmt_f(r.lhs_avg),
            fmt_f(r.bound_free),
            fmt_f(r.bound_det),
            fmt_f(r.bound_prob),
            fmt_f(r.eps_g),
            fmt_f(r.eps_h),
            fmt_f(r.primal_res),
            fmt_f(r.dual_res),
        );
    }
    out
}

pub fn json_string(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Writes the report in the requested format; the path's parent must exist.
pub fn write_report(
    report: &RunReport,
    path: &Path,
    format: ReportFormat,
) -> Result<(), ExperimentError> {
    let body = match format {
        ReportFormat::Csv => csv_string(report),
        ReportFormat::Json => json_string(report),
    };
    fs::write(path, body).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses rows back from a CSV written by [`write_report`].
pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>, ExperimentError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(ExperimentError::Parse(format!(
                "unexpected header {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(ExperimentError::Parse(format!(
                "line {}: expected 10 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let p = |i: usize| -> Result<f64, ExperimentError> {
            fields[i].parse().map_err(|_| {
                ExperimentError::Parse(format!("line {}: bad float {:?}", lineno + 2, fields[i]))
            })
        };
        rows.push(ReportRow {
            k: fields[0].parse().map_err(|_| {
                ExperimentError::Parse(format!("line {}: bad index {:?}", lineno + 2, fields[0]))
            })?,
            f_gap: p(1)?,
            lhs_avg: p(2)?,
            bound_free: p(3)?,
            bound_det: p(4)?,
            bound_prob: p(5)?,
            eps_g: p(6)?,
            eps_h: p(7)?,
            primal_res: p(8)?,
            dual_res: p(9)?,
        });
    }
    Ok(rows)
}

/// Empirical probability recomputed from rows: `#[f_gap < bound_prob] / N`.
pub fn recompute_p(rows: &[ReportRow]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let hits = rows.iter().filter(|r| r.f_gap < r.bound_prob).count();
    Some(hits as f64 / rows.len() as f64)
}
