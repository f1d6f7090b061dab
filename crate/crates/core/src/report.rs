//! Report emission: a stable seven-column CSV layout and versioned JSON
//! documents.
//!
//! Every CSV artifact uses the columns
//! `(kernel, r, n, branch, statistic, value, stderr)` with RFC 4180 quoting;
//! `n = 0` marks asymptotic (limit) rows and the `stderr` field is empty when
//! a statistic has no sampling error. JSON documents carry a `schema` tag.

use std::io::Write;

use serde::Serialize;
use serde_json::json;

use crate::analytics::{LimitConstants, MomentRow};
use crate::montecarlo::{BranchSummary, EnsembleSummary};
use crate::pmf::Pmf;
use crate::stats::TestReport;

pub const SUMMARY_SCHEMA: &str = "erw-summary/1";
pub const PMF_SCHEMA: &str = "erw-pmf/1";
pub const MOMENTS_SCHEMA: &str = "erw-moments/1";
pub const CONSTANTS_SCHEMA: &str = "erw-constants/1";
pub const REPORT_SCHEMA: &str = "erw-report/1";

/// One row of the stable CSV layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub kernel: String,
    pub r: f64,
    pub n: u64,
    pub branch: String,
    pub statistic: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

impl CsvRow {
    fn new(kernel: &str, r: f64, n: u64, branch: &str, statistic: impl Into<String>, value: f64) -> Self {
        CsvRow {
            kernel: kernel.to_string(),
            r,
            n,
            branch: branch.to_string(),
            statistic: statistic.into(),
            value,
            stderr: None,
        }
    }

    fn with_stderr(mut self, se: f64) -> Self {
        self.stderr = Some(se);
        self
    }
}

/// Writes rows in the documented column order.
pub fn write_csv<W: Write>(writer: W, rows: &[CsvRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["kernel", "r", "n", "branch", "statistic", "value", "stderr"])?;
    for row in rows {
        w.write_record([
            row.kernel.as_str(),
            &format_float(row.r),
            &row.n.to_string(),
            row.branch.as_str(),
            row.statistic.as_str(),
            &format_float(row.value),
            &row.stderr.map(format_float).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip decimal form; stable across runs and worker counts.
fn format_float(v: f64) -> String {
    format!("{v}")
}

fn branch_rows(kernel: &str, r: f64, n: u64, branch: &str, summary: &BranchSummary) -> Vec<CsvRow> {
    let stats = &summary.nonzeros;
    let mut rows = vec![CsvRow::new(kernel, r, n, branch, "count", stats.count() as f64)];
    if stats.count() == 0 {
        return rows;
    }
    rows.push(
        CsvRow::new(kernel, r, n, branch, "nonzeros_mean", stats.mean())
            .with_stderr(stats.stderr()),
    );
    rows.push(CsvRow::new(kernel, r, n, branch, "nonzeros_var", stats.variance()));
    rows.push(CsvRow::new(kernel, r, n, branch, "nonzeros_min", stats.min()));
    rows.push(CsvRow::new(kernel, r, n, branch, "nonzeros_max", stats.max()));
    let scale = (n as f64).powf(1.0 - r);
    rows.push(
        CsvRow::new(kernel, r, n, branch, "scaled_mean", stats.mean() / scale)
            .with_stderr(stats.stderr() / scale),
    );
    rows.push(CsvRow::new(kernel, r, n, branch, "scaled_var", stats.variance() / (scale * scale)));
    rows.push(CsvRow::new(kernel, r, n, branch, "clt_atom_fraction", summary.atom_fraction()));
    rows
}

/// Long-format rows of an ensemble summary: one row per
/// checkpoint x branch x statistic.
pub fn summary_rows(summary: &EnsembleSummary) -> Vec<CsvRow> {
    let kernel = summary.kernel.label();
    let mut rows = Vec::new();
    for cp in &summary.checkpoints {
        rows.extend(branch_rows(&kernel, summary.r, cp.n, "all", &cp.all));
        rows.extend(branch_rows(&kernel, summary.r, cp.n, "first=0", &cp.first_zero));
        rows.extend(branch_rows(&kernel, summary.r, cp.n, "first=1", &cp.first_nonzero));
    }
    rows
}

pub fn summary_json(summary: &EnsembleSummary) -> serde_json::Value {
    json!({
        "schema": SUMMARY_SCHEMA,
        "summary": summary,
    })
}

/// Rows of an exact law: `pmf[k]` per support point.
pub fn pmf_rows(kernel: &str, r: f64, n: u64, branch: &str, pmf: &Pmf) -> Vec<CsvRow> {
    pmf.support()
        .iter()
        .zip(pmf.probs())
        .map(|(&k, &p)| CsvRow::new(kernel, r, n, branch, format!("pmf[{k}]"), p))
        .collect()
}

pub fn pmf_json(kernel: &str, r: f64, n: u64, branch: &str, pmf: &Pmf) -> serde_json::Value {
    json!({
        "schema": PMF_SCHEMA,
        "kernel": kernel,
        "r": r,
        "n": n,
        "branch": branch,
        "support": pmf.support(),
        "probs": pmf.probs(),
    })
}

/// Rows of a moment table (per-`n` exact moments).
pub fn moment_rows(kernel: &str, r: f64, branch: &str, table: &[MomentRow]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for m in table {
        rows.push(CsvRow::new(kernel, r, m.n, branch, "mean", m.mean));
        rows.push(CsvRow::new(kernel, r, m.n, branch, "second_moment", m.second_moment));
        rows.push(CsvRow::new(kernel, r, m.n, branch, "variance", m.variance));
        if let Some(mixed) = m.mixed_moment {
            rows.push(CsvRow::new(kernel, r, m.n, branch, "mixed_moment", mixed));
        }
        if let Some(ind) = m.indicator_mean {
            rows.push(CsvRow::new(kernel, r, m.n, branch, "indicator_mean", ind));
        }
    }
    rows
}

pub fn moments_json(kernel: &str, r: f64, branch: &str, table: &[MomentRow]) -> serde_json::Value {
    json!({
        "schema": MOMENTS_SCHEMA,
        "kernel": kernel,
        "r": r,
        "branch": branch,
        "rows": table,
    })
}

/// Limit-constant rows; `n = 0` marks asymptotic values.
pub fn constant_rows(kernel: &str, constants: &LimitConstants) -> Vec<CsvRow> {
    let r = constants.r;
    let pairs: [(&str, f64); 15] = [
        ("c_r", constants.c_r),
        ("d_r", constants.d_r),
        ("mean_limit", constants.mean_limit),
        ("var_limit", constants.var_limit),
        ("y_mean", constants.y_mean),
        ("y_var_from_moments", constants.y_var_from_moments),
        ("y_var_alternate", constants.y_var_alternate),
        ("sigma_star_sq", constants.sigma_star_sq),
        ("mixed_var_rate", constants.mixed_var_rate),
        ("first_only_nonzero_rate", constants.first_only_nonzero_rate),
        ("first_only_zero_rate", constants.first_only_zero_rate),
        ("mixed_nonzero_rate", constants.mixed_nonzero_rate),
        ("mixed_zero_rate", constants.mixed_zero_rate),
        ("geometric_mean", constants.geometric_mean),
        ("r", r),
    ];
    pairs
        .iter()
        .map(|&(name, value)| CsvRow::new(kernel, r, 0, "all", name, value))
        .collect()
}

pub fn constants_json(constants: &LimitConstants) -> serde_json::Value {
    json!({
        "schema": CONSTANTS_SCHEMA,
        "constants": constants,
    })
}

/// The verification report document.
pub fn reports_json(suite: &str, seed: u64, reports: &[TestReport]) -> serde_json::Value {
    let gating_pass = reports.iter().filter(|r| !r.informational).all(|r| r.pass);
    json!({
        "schema": REPORT_SCHEMA,
        "suite": suite,
        "seed": seed,
        "pass": gating_pass,
        "reports": reports,
    })
}

/// Human-readable table of verification results.
pub fn render_table(reports: &[TestReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<44} {:<12} {:>12} {:>12} {:>6} {}\n",
        "check", "statistic", "value", "threshold", "pass", "note"
    ));
    for r in reports {
        let flag = if r.pass { "ok" } else { "FAIL" };
        let info = if r.informational { " (info)" } else { "" };
        out.push_str(&format!(
            "{:<44} {:<12} {:>12.5e} {:>12.5e} {:>6} {}{}\n",
            r.name, r.statistic, r.value, r.threshold, flag, r.detail, info
        ));
    }
    out
}
