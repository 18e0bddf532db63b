//! Link prediction evaluation.
//!
//! Every test triple yields a head query and a tail query, ranked against all
//! entities of the model's time step. The continual protocol scores the model
//! of time `i` on the test sets of times `1..=i` and averages the per-snapshot
//! metrics with equal weight.

mod rank;
mod report;

use serde::{Deserialize, Serialize};

pub use self::rank::{evaluate_snapshot, rank_all, rank_triple, MetricsReport, QueryMode, RankQuery};
pub use self::report::{
    emit_mrr_matrix, emit_report, load_report, EvalReport, MrrCell, ReportFormat, CSV_HEADER,
};

use crate::error::{Error, Result};
use crate::kg::{EntityId, GrowingDataset};
use crate::trainer::{EmbeddingTable, ScoreNorm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    #[default]
    Filtered,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetrics {
    /// Time of the test set.
    pub time: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub model_time: usize,
    pub mode: EvalMode,
    pub per_snapshot: Vec<SnapshotMetrics>,
    pub mean: MetricsReport,
}

impl AggregateReport {
    pub fn from_snapshots(model_time: usize, mode: EvalMode, per_snapshot: Vec<SnapshotMetrics>) -> Self {
        let reports: Vec<MetricsReport> = per_snapshot.iter().map(|s| s.metrics).collect();
        AggregateReport {
            model_time,
            mode,
            mean: MetricsReport::mean(&reports),
            per_snapshot,
        }
    }
}

/// Scores the model of `model_time` on the new test triples of every time
/// `1..=model_time`. Filtering uses all triples known at `model_time`.
pub fn time_averaged_metrics(
    table: &EmbeddingTable,
    norm: ScoreNorm,
    dataset: &GrowingDataset,
    model_time: usize,
    mode: EvalMode,
) -> Result<AggregateReport> {
    let snapshot = dataset
        .snapshot(model_time)
        .ok_or_else(|| Error::Eval(format!("no snapshot for time {model_time}")))?;
    let candidates: Vec<EntityId> = snapshot.entities.iter().copied().collect();
    let filter = match mode {
        EvalMode::Filtered => Some(&snapshot.cumulative),
        EvalMode::Raw => None,
    };
    let mut per_snapshot = Vec::with_capacity(model_time);
    for time in 1..=model_time {
        let delta = dataset
            .delta(time)
            .ok_or_else(|| Error::Eval(format!("missing test snapshot for time {time}")))?;
        let metrics = evaluate_snapshot(table, norm, &delta.test, &candidates, filter)
            .map_err(|e| Error::Eval(format!("test set of time {time}: {e}")))?;
        per_snapshot.push(SnapshotMetrics { time, metrics });
    }
    Ok(AggregateReport::from_snapshots(model_time, mode, per_snapshot))
}
