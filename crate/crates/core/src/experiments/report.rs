//! Long-format CSV and JSON summaries.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// One row of the long-format CSV report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub experiment: String,
    pub functional: String,
    /// Expansion order the row refers to.
    pub m: usize,
    pub alpha: f64,
    pub p: f64,
    /// `|δ|`, empty for rows that summarize the whole δ-grid.
    pub delta: Option<f64>,
    /// `+`, `-`, or empty when the sign does not apply.
    pub sign: String,
    pub statistic: String,
    pub value: f64,
    pub seed: u64,
}

/// A report with a CSV form and a JSON summary.
pub trait Report: Serialize {
    /// File stem of both outputs.
    fn stem(&self) -> &'static str;
    /// Rows of the CSV form.
    fn csv_rows(&self) -> Vec<CsvRow>;
    /// Whether every check in the report passed.
    fn passed(&self) -> bool;
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir` and returns their paths.
pub fn write_report<R: Report>(report: &R, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", report.stem()));
    let json_path = dir.join(format!("{}.json", report.stem()));
    let mut w = csv::Writer::from_path(&csv_path)?;
    for row in report.csv_rows() {
        w.serialize(row)?;
    }
    w.flush()?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}
