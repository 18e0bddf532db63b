use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, Triple};
use crate::trainer::{EmbeddingTable, ScoreNorm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryMode {
    ReplaceHead,
    ReplaceTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankQuery {
    pub triple: Triple,
    pub mode: QueryMode,
}

impl RankQuery {
    pub fn head(triple: Triple) -> Self {
        RankQuery {
            triple,
            mode: QueryMode::ReplaceHead,
        }
    }

    pub fn tail(triple: Triple) -> Self {
        RankQuery {
            triple,
            mode: QueryMode::ReplaceTail,
        }
    }

    fn gold(&self) -> EntityId {
        match self.mode {
            QueryMode::ReplaceHead => self.triple.head,
            QueryMode::ReplaceTail => self.triple.tail,
        }
    }

    fn substitute(&self, e: EntityId) -> Triple {
        let t = self.triple;
        match self.mode {
            QueryMode::ReplaceHead => Triple::new(e, t.relation, t.tail),
            QueryMode::ReplaceTail => Triple::new(t.head, t.relation, e),
        }
    }
}

/// Filtered (or raw, when `filter` is `None`) rank of the gold entity among
/// `candidates`. Candidates forming another known triple are skipped; ties
/// with the gold score count against it.
pub fn rank_triple(
    table: &EmbeddingTable,
    norm: ScoreNorm,
    query: &RankQuery,
    candidates: &[EntityId],
    filter: Option<&HashSet<Triple>>,
) -> Result<usize> {
    let t = query.triple;
    for e in [t.head, t.tail] {
        if !table.has_entity(e) {
            return Err(Error::Eval(format!("entity {e} of {t} has no embedding")));
        }
    }
    if !table.has_relation(t.relation) {
        return Err(Error::Eval(format!("relation {} of {t} has no embedding", t.relation)));
    }
    let gold = query.gold();
    let gold_score = table.score(&t, norm);
    let mut better = 0;
    for &c in candidates {
        if c == gold {
            continue;
        }
        let candidate = query.substitute(c);
        if filter.is_some_and(|f| f.contains(&candidate)) {
            continue;
        }
        if table.score(&candidate, norm) <= gold_score {
            better += 1;
        }
    }
    Ok(better + 1)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub n_queries: usize,
}

impl MetricsReport {
    pub fn from_ranks(ranks: &[usize]) -> Self {
        if ranks.is_empty() {
            return Self::default();
        }
        let n = ranks.len() as f64;
        let hits = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        MetricsReport {
            mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
            hits1: hits(1),
            hits3: hits(3),
            hits10: hits(10),
            n_queries: ranks.len(),
        }
    }

    /// Unweighted mean of each metric; `n_queries` is the total.
    pub fn mean(reports: &[MetricsReport]) -> Self {
        if reports.is_empty() {
            return Self::default();
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        MetricsReport {
            mrr: avg(|r| r.mrr),
            hits1: avg(|r| r.hits1),
            hits3: avg(|r| r.hits3),
            hits10: avg(|r| r.hits10),
            n_queries: reports.iter().map(|r| r.n_queries).sum(),
        }
    }
}

/// Head and tail ranks for every triple, in input order.
pub fn rank_all(
    table: &EmbeddingTable,
    norm: ScoreNorm,
    test: &[Triple],
    candidates: &[EntityId],
    filter: Option<&HashSet<Triple>>,
) -> Result<Vec<usize>> {
    let pairs = test
        .par_iter()
        .map(|t| {
            Ok([
                rank_triple(table, norm, &RankQuery::head(*t), candidates, filter)?,
                rank_triple(table, norm, &RankQuery::tail(*t), candidates, filter)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().flatten().collect())
}

pub fn evaluate_snapshot(
    table: &EmbeddingTable,
    norm: ScoreNorm,
    test: &[Triple],
    candidates: &[EntityId],
    filter: Option<&HashSet<Triple>>,
) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::Eval("empty test set".into()));
    }
    let ranks = rank_all(table, norm, test, candidates, filter)?;
    Ok(MetricsReport::from_ranks(&ranks))
}
