use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AggregateReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = ["time", "dataset", "mrr", "h1", "h3", "h10", "n_queries"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Evaluation result with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub seed: u64,
    pub config_hash: String,
    pub aggregate: AggregateReport,
}

/// Writes `report` as pretty JSON, or as CSV with one row per test snapshot
/// followed by a `mean` row.
pub fn emit_report(report: &EvalReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(report)?;
            fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(CSV_HEADER)?;
            let rows = report
                .aggregate
                .per_snapshot
                .iter()
                .map(|s| (s.time.to_string(), s.metrics))
                .chain(std::iter::once(("mean".to_owned(), report.aggregate.mean)));
            for (time, m) in rows {
                w.write_record([
                    time,
                    report.dataset.clone(),
                    format!("{:.6}", m.mrr),
                    format!("{:.6}", m.hits1),
                    format!("{:.6}", m.hits3),
                    format!("{:.6}", m.hits10),
                    m.n_queries.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

pub fn load_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// MRR of the model of one time on the test set of another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrrCell {
    pub model_time: usize,
    pub test_time: usize,
    pub mrr: f64,
}

/// Per-snapshot MRR table (`model_time,test_time,mrr`) for plotting.
pub fn emit_mrr_matrix(cells: &[MrrCell], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model_time", "test_time", "mrr"])?;
    for c in cells {
        w.write_record([
            c.model_time.to_string(),
            c.test_time.to_string(),
            format!("{:.6}", c.mrr),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
