//! Growing knowledge graph storage.
//!
//! A [`GrowingDataset`] is a sequence of snapshots `G_1 .. G_n`. Each snapshot
//! holds the triples introduced in its own `train/valid/test` files together
//! with the cumulative entity, relation and triple sets up to that time. The
//! [`Delta`] of time `i` is the set difference against time `i - 1`.

mod io;
mod validate;
mod vocab;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use self::io::{load_dataset, load_dataset_with, save_dataset, write_vocabulary, LoadOptions};
pub use self::validate::{validate_dataset, ValidationReport, Violation};
pub use self::vocab::{Interner, Vocabulary};

use crate::error::{Error, Result};

pub type EntityId = u32;
pub type RelationId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub const fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.head, self.relation, self.tail)
    }
}

impl From<(EntityId, RelationId, EntityId)> for Triple {
    fn from((h, r, t): (EntityId, RelationId, EntityId)) -> Self {
        Triple::new(h, r, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.txt",
            Split::Valid => "valid.txt",
            Split::Test => "test.txt",
        }
    }
}

/// Cumulative state of the graph at one time step.
#[derive(Debug, Clone, Default)]
pub struct KgSnapshot {
    /// 1-based time index.
    pub time: usize,
    pub entities: BTreeSet<EntityId>,
    pub relations: BTreeSet<RelationId>,
    /// Triples listed in this time step's files.
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    /// Every triple known up to and including this time.
    pub cumulative: HashSet<Triple>,
}

impl KgSnapshot {
    /// Builds snapshot `time` on top of `previous` (or from scratch when `None`).
    pub fn extend(
        previous: Option<&KgSnapshot>,
        time: usize,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        let mut snapshot = match previous {
            Some(p) => KgSnapshot {
                time,
                entities: p.entities.clone(),
                relations: p.relations.clone(),
                cumulative: p.cumulative.clone(),
                ..Default::default()
            },
            None => KgSnapshot {
                time,
                ..Default::default()
            },
        };
        for t in train.iter().chain(&valid).chain(&test) {
            snapshot.entities.insert(t.head);
            snapshot.entities.insert(t.tail);
            snapshot.relations.insert(t.relation);
            snapshot.cumulative.insert(*t);
        }
        snapshot.train = train;
        snapshot.valid = valid;
        snapshot.test = test;
        snapshot
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Triples of this time step's files, in train, valid, test order.
    pub fn current_triples(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    pub fn stats(&self) -> SnapshotStats {
        SnapshotStats {
            time: self.time,
            num_entities: self.entities.len(),
            num_relations: self.relations.len(),
            num_triples: self.train.len() + self.valid.len() + self.test.len(),
        }
    }
}

/// Cumulative entity and relation counts, and the number of triples listed at this time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub time: usize,
    pub num_entities: usize,
    pub num_relations: usize,
    pub num_triples: usize,
}

/// Increment of time `time` over the previous snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Delta {
    pub time: usize,
    pub new_entities: Vec<EntityId>,
    pub new_relations: Vec<RelationId>,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
}

impl Delta {
    pub fn new_triples(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    pub fn num_new_triples(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_entities.is_empty() && self.new_relations.is_empty() && self.num_new_triples() == 0
    }
}

/// Set difference of two snapshots.
///
/// `previous` must be the snapshot of the immediately preceding time, the same
/// time (yielding an empty delta), or `None` for the first time step. Triples
/// already known at `previous` are dropped; repeated triples within the current
/// files keep their first occurrence in train, valid, test order.
pub fn compute_delta(current: &KgSnapshot, previous: Option<&KgSnapshot>) -> Result<Delta> {
    let empty = HashSet::new();
    let (prev_entities, prev_relations, prev_triples) = match previous {
        Some(p) => {
            if p.time > current.time || p.time + 1 < current.time {
                return Err(Error::OutOfOrder {
                    current: current.time,
                    previous: p.time,
                });
            }
            (Some(&p.entities), Some(&p.relations), &p.cumulative)
        }
        None => (None, None, &empty),
    };

    let new_entities = current
        .entities
        .iter()
        .copied()
        .filter(|e| prev_entities.is_none_or(|s| !s.contains(e)))
        .collect();
    let new_relations = current
        .relations
        .iter()
        .copied()
        .filter(|r| prev_relations.is_none_or(|s| !s.contains(r)))
        .collect();

    let mut seen = HashSet::new();
    let mut pick = |list: &[Triple]| -> Vec<Triple> {
        list.iter()
            .copied()
            .filter(|t| !prev_triples.contains(t) && seen.insert(*t))
            .collect()
    };
    let train = pick(&current.train);
    let valid = pick(&current.valid);
    let test = pick(&current.test);

    Ok(Delta {
        time: current.time,
        new_entities,
        new_relations,
        train,
        valid,
        test,
    })
}

/// An ordered sequence of snapshots over a shared vocabulary.
#[derive(Debug, Clone, Default)]
pub struct GrowingDataset {
    pub vocab: Vocabulary,
    pub snapshots: Vec<KgSnapshot>,
    pub deltas: Vec<Delta>,
}

impl GrowingDataset {
    /// Assembles a dataset from per-time `(train, valid, test)` lists, computing
    /// cumulative sets and deltas.
    pub fn from_splits(
        vocab: Vocabulary,
        splits: Vec<(Vec<Triple>, Vec<Triple>, Vec<Triple>)>,
    ) -> Result<Self> {
        let mut snapshots: Vec<KgSnapshot> = Vec::with_capacity(splits.len());
        let mut deltas = Vec::with_capacity(splits.len());
        for (i, (train, valid, test)) in splits.into_iter().enumerate() {
            let snapshot = KgSnapshot::extend(snapshots.last(), i + 1, train, valid, test);
            deltas.push(compute_delta(&snapshot, snapshots.last())?);
            snapshots.push(snapshot);
        }
        Ok(GrowingDataset {
            vocab,
            snapshots,
            deltas,
        })
    }

    pub fn num_times(&self) -> usize {
        self.snapshots.len()
    }

    /// Snapshot at 1-based `time`.
    pub fn snapshot(&self, time: usize) -> Option<&KgSnapshot> {
        time.checked_sub(1).and_then(|i| self.snapshots.get(i))
    }

    pub fn delta(&self, time: usize) -> Option<&Delta> {
        time.checked_sub(1).and_then(|i| self.deltas.get(i))
    }

    /// Entities of the previous snapshot (empty at time 1).
    pub fn old_entities(&self, time: usize) -> BTreeSet<EntityId> {
        time.checked_sub(1)
            .and_then(|t| self.snapshot(t))
            .map(|s| s.entities.clone())
            .unwrap_or_default()
    }

    pub fn old_relations(&self, time: usize) -> BTreeSet<RelationId> {
        time.checked_sub(1)
            .and_then(|t| self.snapshot(t))
            .map(|s| s.relations.clone())
            .unwrap_or_default()
    }

    pub fn stats(&self) -> Vec<SnapshotStats> {
        self.snapshots.iter().map(KgSnapshot::stats).collect()
    }
}
