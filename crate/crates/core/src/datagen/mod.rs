//! Growing datasets built from a static base KG.

mod schedule;
mod synthetic;

pub use schedule::{GrowthPattern, GrowthSchedule};
pub use synthetic::{generate_base_kg, SyntheticKgConfig};

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{save_dataset, GrowingDataset, Triple, Vocabulary};

pub const SCHEDULE_FILE: &str = "schedule.json";

/// A static KG: distinct triples over a vocabulary.
#[derive(Debug, Clone, Default)]
pub struct BaseKg {
    pub vocab: Vocabulary,
    pub triples: Vec<Triple>,
}

impl BaseKg {
    /// Reads tab-separated `head relation tail` lines. Repeated lines are kept once.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut kg = BaseKg::default();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let t = Triple::new(
                kg.vocab.entities.get_or_insert(fields[0]),
                kg.vocab.relations.get_or_insert(fields[1]),
                kg.vocab.entities.get_or_insert(fields[2]),
            );
            if seen.insert(t) {
                kg.triples.push(t);
            }
        }
        Ok(kg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for t in &self.triples {
            for (i, name) in [
                self.vocab.entities.name(t.head),
                self.vocab.relations.name(t.relation),
                self.vocab.entities.name(t.tail),
            ]
            .into_iter()
            .enumerate()
            {
                let name = name.ok_or_else(|| Error::Config(format!("triple {t} has an unnamed id")))?;
                out.push_str(name);
                out.push(if i == 2 { '\n' } else { '\t' });
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Shuffles `triples` with `seed` and splits 3:1:1, remainder to train.
pub fn split_train_valid_test(
    triples: &[Triple],
    seed: u64,
) -> Result<(Vec<Triple>, Vec<Triple>, Vec<Triple>)> {
    if triples.len() < 5 {
        return Err(Error::Schedule(format!(
            "need at least 5 triples to split 3:1:1, got {}",
            triples.len()
        )));
    }
    let mut shuffled = triples.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = shuffled.len() / 5;
    let test = shuffled.split_off(shuffled.len() - k);
    let valid = shuffled.split_off(shuffled.len() - k);
    Ok((shuffled, valid, test))
}

/// Record of how a dataset was generated, written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub pattern: GrowthPattern,
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub base_triples: usize,
}

/// Shuffles the base triples and assigns consecutive chunks of the scheduled
/// sizes to times `1..=n`, each split 3:1:1.
pub fn build_growth_dataset(base: &BaseKg, schedule: &GrowthSchedule, seed: u64) -> Result<GrowingDataset> {
    let sizes = schedule.sizes(base.triples.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = base.triples.clone();
    shuffled.shuffle(&mut rng);
    let mut splits = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for (i, &n) in sizes.iter().enumerate() {
        let chunk = &shuffled[start..start + n];
        start += n;
        let split_seed = seed.wrapping_add(0x5851_F42D_4C95_7F2D_u64.wrapping_mul(i as u64 + 1));
        splits.push(split_train_valid_test(chunk, split_seed)?);
    }
    let mut dataset = GrowingDataset::from_splits(base.vocab.clone(), splits)?;
    compact_vocabulary(&mut dataset);
    Ok(dataset)
}

/// Renumbers ids in order of first appearance (time, then train/valid/test),
/// dropping base names that never occur.
fn compact_vocabulary(dataset: &mut GrowingDataset) {
    let mut vocab = Vocabulary::new();
    let old = std::mem::take(&mut dataset.vocab);
    let splits: Vec<_> = dataset
        .snapshots
        .iter()
        .map(|s| {
            let map = |ts: &[Triple], v: &mut Vocabulary| -> Vec<Triple> {
                ts.iter()
                    .map(|t| {
                        Triple::new(
                            v.entities.get_or_insert(old.entities.name(t.head).expect("named")),
                            v.relations.get_or_insert(old.relations.name(t.relation).expect("named")),
                            v.entities.get_or_insert(old.entities.name(t.tail).expect("named")),
                        )
                    })
                    .collect()
            };
            let train = map(&s.train, &mut vocab);
            let valid = map(&s.valid, &mut vocab);
            let test = map(&s.test, &mut vocab);
            (train, valid, test)
        })
        .collect();
    *dataset = GrowingDataset::from_splits(vocab, splits).expect("renumbering keeps times consecutive");
}

/// Builds the dataset and writes it with `schedule.json` under `out`.
pub fn prepare_dataset(
    base: &BaseKg,
    schedule: &GrowthSchedule,
    seed: u64,
    out: impl AsRef<Path>,
) -> Result<GrowingDataset> {
    let out = out.as_ref();
    let dataset = build_growth_dataset(base, schedule, seed)?;
    save_dataset(&dataset, out)?;
    let record = ScheduleRecord {
        pattern: schedule.pattern,
        sizes: dataset.deltas.iter().map(|d| d.num_new_triples()).collect(),
        seed,
        base_triples: base.triples.len(),
    };
    let path = out.join(SCHEDULE_FILE);
    let json = serde_json::to_string_pretty(&record)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(dataset)
}
