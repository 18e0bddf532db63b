use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{compute_delta, EntityId, GrowingDataset, RelationId, Triple};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    NonConsecutiveTime { index: usize, time: usize },
    VocabularyNotBijective,
    MissingEntity { time: usize, entity: EntityId },
    MissingRelation { time: usize, relation: RelationId },
    DanglingEntity { time: usize, triple: Triple },
    DanglingRelation { time: usize, triple: Triple },
    DuplicateInDelta { time: usize, triple: Triple },
    CumulativeMismatch { time: usize },
    DeltaMismatch { time: usize },
    DeltaCountMismatch { snapshots: usize, deltas: usize },
    UnionMismatch,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonConsecutiveTime { index, time } => {
                write!(f, "snapshot #{index} has time {time}, expected {}", index + 1)
            }
            Violation::VocabularyNotBijective => write!(f, "vocabulary is not a bijection"),
            Violation::MissingEntity { time, entity } => write!(
                f,
                "time {time}: entity {entity} of time {} is missing (non-monotone growth)",
                time - 1
            ),
            Violation::MissingRelation { time, relation } => write!(
                f,
                "time {time}: relation {relation} of time {} is missing (non-monotone growth)",
                time - 1
            ),
            Violation::DanglingEntity { time, triple } => {
                write!(f, "time {time}: triple {triple} references an unknown entity")
            }
            Violation::DanglingRelation { time, triple } => {
                write!(f, "time {time}: triple {triple} references an unknown relation")
            }
            Violation::DuplicateInDelta { time, triple } => {
                write!(f, "time {time}: new triple {triple} listed more than once")
            }
            Violation::CumulativeMismatch { time } => write!(
                f,
                "time {time}: cumulative triples differ from previous cumulative plus current files"
            ),
            Violation::DeltaMismatch { time } => {
                write!(f, "time {time}: stored delta differs from the snapshot set difference")
            }
            Violation::DeltaCountMismatch { snapshots, deltas } => {
                write!(f, "{snapshots} snapshots but {deltas} deltas")
            }
            Violation::UnionMismatch => {
                write!(f, "union of deltas differs from the final cumulative triple set")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(10) {
            write!(f, "; {v}")?;
        }
        if self.violations.len() > 10 {
            write!(f, "; ...")?;
        }
        Ok(())
    }
}

/// Checks every snapshot and delta invariant. An empty report means the dataset is valid.
pub fn validate_dataset(dataset: &GrowingDataset) -> ValidationReport {
    let mut violations = Vec::new();

    if !dataset.vocab.entities.is_bijective() || !dataset.vocab.relations.is_bijective() {
        violations.push(Violation::VocabularyNotBijective);
    }
    if dataset.deltas.len() != dataset.snapshots.len() {
        violations.push(Violation::DeltaCountMismatch {
            snapshots: dataset.snapshots.len(),
            deltas: dataset.deltas.len(),
        });
    }

    for (index, snapshot) in dataset.snapshots.iter().enumerate() {
        let time = snapshot.time;
        if time != index + 1 {
            violations.push(Violation::NonConsecutiveTime { index, time });
        }
        let previous = index.checked_sub(1).map(|i| &dataset.snapshots[i]);

        if let Some(p) = previous {
            for &e in p.entities.difference(&snapshot.entities) {
                violations.push(Violation::MissingEntity { time, entity: e });
            }
            for &r in p.relations.difference(&snapshot.relations) {
                violations.push(Violation::MissingRelation { time, relation: r });
            }
        }

        let mut dangling: Vec<&Triple> = snapshot.current_triples().collect();
        dangling.extend(snapshot.cumulative.iter());
        let mut reported = HashSet::new();
        for t in dangling {
            if !reported.insert(*t) {
                continue;
            }
            let entity_ok = snapshot.entities.contains(&t.head)
                && snapshot.entities.contains(&t.tail)
                && (t.head as usize) < dataset.vocab.entities.len()
                && (t.tail as usize) < dataset.vocab.entities.len();
            if !entity_ok {
                violations.push(Violation::DanglingEntity { time, triple: *t });
            }
            let relation_ok = snapshot.relations.contains(&t.relation)
                && (t.relation as usize) < dataset.vocab.relations.len();
            if !relation_ok {
                violations.push(Violation::DanglingRelation { time, triple: *t });
            }
        }

        let mut expected: HashSet<Triple> =
            previous.map(|p| p.cumulative.clone()).unwrap_or_default();
        expected.extend(snapshot.current_triples().copied());
        if expected != snapshot.cumulative {
            violations.push(Violation::CumulativeMismatch { time });
        }

        let known = previous.map(|p| &p.cumulative);
        let mut seen = HashSet::new();
        for t in snapshot.current_triples() {
            if known.is_some_and(|k| k.contains(t)) {
                continue;
            }
            if !seen.insert(*t) {
                violations.push(Violation::DuplicateInDelta { time, triple: *t });
            }
        }

        if let Some(stored) = dataset.deltas.get(index) {
            match compute_delta(snapshot, previous) {
                Ok(recomputed) if &recomputed == stored => {}
                _ => violations.push(Violation::DeltaMismatch { time }),
            }
            let mut in_delta = HashSet::new();
            for t in stored.new_triples() {
                if !in_delta.insert(*t) {
                    violations.push(Violation::DuplicateInDelta { time, triple: *t });
                }
            }
        }
    }

    if let Some(last) = dataset.snapshots.last() {
        let union: HashSet<Triple> = dataset
            .deltas
            .iter()
            .flat_map(|d| d.new_triples().copied())
            .collect();
        if union != last.cumulative {
            violations.push(Violation::UnionMismatch);
        }
    }

    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{GrowingDataset, Vocabulary};

    fn toy() -> GrowingDataset {
        let mut vocab = Vocabulary::new();
        for n in ["a", "b", "c", "d"] {
            vocab.entities.get_or_insert(n);
        }
        for n in ["r", "s"] {
            vocab.relations.get_or_insert(n);
        }
        GrowingDataset::from_splits(
            vocab,
            vec![
                (vec![Triple::new(0, 0, 1)], vec![], vec![]),
                (vec![Triple::new(1, 1, 2)], vec![Triple::new(2, 0, 3)], vec![]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn consistent_dataset_has_empty_report() {
        assert!(validate_dataset(&toy()).is_empty());
    }

    #[test]
    fn missing_entity_is_a_monotonicity_violation() {
        let mut ds = toy();
        ds.snapshots[1].entities.remove(&0);
        let report = validate_dataset(&ds);
        assert!(report
            .violations
            .contains(&Violation::MissingEntity { time: 2, entity: 0 }));
    }

    #[test]
    fn unknown_relation_is_dangling() {
        let mut ds = toy();
        let bad = Triple::new(0, 7, 1);
        ds.snapshots[1].train.push(bad);
        ds.snapshots[1].cumulative.insert(bad);
        let report = validate_dataset(&ds);
        assert!(report
            .violations
            .contains(&Violation::DanglingRelation { time: 2, triple: bad }));
    }
}
