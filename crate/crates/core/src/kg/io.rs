//! On-disk layout: `<root>/<time>/{train,valid,test}.txt`, tab separated
//! `head relation tail` lines, with optional `entity2id.txt` and
//! `relation2id.txt` sidecars (`name<TAB>id`) at the root.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::validate::{validate_dataset, ValidationReport, Violation};
use super::{compute_delta, GrowingDataset, Interner, KgSnapshot, Split, Triple, Vocabulary};
use crate::error::{Error, Result};

pub const ENTITY_SIDECAR: &str = "entity2id.txt";
pub const RELATION_SIDECAR: &str = "relation2id.txt";

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Drop repeated new triples within one snapshot instead of failing.
    pub dedupe_within_delta: bool,
    /// Write `entity2id.txt`/`relation2id.txt` to the dataset root when absent.
    pub write_vocab_sidecars: bool,
}

pub fn load_dataset(root: impl AsRef<Path>) -> Result<GrowingDataset> {
    load_dataset_with(root, &LoadOptions::default())
}

pub fn load_dataset_with(root: impl AsRef<Path>, options: &LoadOptions) -> Result<GrowingDataset> {
    let root = root.as_ref();
    let time_dirs = list_time_dirs(root)?;
    if time_dirs.is_empty() {
        return Err(Error::Parse {
            path: root.to_path_buf(),
            line: 0,
            message: "no time step directories found".into(),
        });
    }

    let entity_sidecar = read_sidecar(&root.join(ENTITY_SIDECAR))?;
    let relation_sidecar = read_sidecar(&root.join(RELATION_SIDECAR))?;
    let had_sidecars = entity_sidecar.is_some() && relation_sidecar.is_some();
    let mut vocab = Vocabulary {
        entities: entity_sidecar.clone().unwrap_or_default(),
        relations: relation_sidecar.clone().unwrap_or_default(),
    };

    let mut snapshots: Vec<KgSnapshot> = Vec::with_capacity(time_dirs.len());
    let mut deltas = Vec::with_capacity(time_dirs.len());
    let mut duplicates = Vec::new();

    for (index, dir) in time_dirs.iter().enumerate() {
        let time = index + 1;
        let known = snapshots.last().map(|s| &s.cumulative);
        let mut seen_new = HashSet::new();
        let mut lists: [Vec<Triple>; 3] = Default::default();
        for (slot, split) in Split::ALL.into_iter().enumerate() {
            let path = dir.join(split.file_name());
            let parsed = read_triples(
                &path,
                &mut vocab,
                entity_sidecar.is_some(),
                relation_sidecar.is_some(),
            )?;
            let mut kept = Vec::with_capacity(parsed.len());
            for triple in parsed {
                let is_new = known.is_none_or(|k| !k.contains(&triple));
                if is_new && !seen_new.insert(triple) {
                    if options.dedupe_within_delta {
                        continue;
                    }
                    duplicates.push(Violation::DuplicateInDelta { time, triple });
                }
                kept.push(triple);
            }
            lists[slot] = kept;
        }
        let [train, valid, test] = lists;
        let snapshot = KgSnapshot::extend(snapshots.last(), time, train, valid, test);
        deltas.push(compute_delta(&snapshot, snapshots.last())?);
        snapshots.push(snapshot);
    }

    if !duplicates.is_empty() {
        return Err(Error::Validation(ValidationReport {
            violations: duplicates,
        }));
    }

    let dataset = GrowingDataset {
        vocab,
        snapshots,
        deltas,
    };
    let report = validate_dataset(&dataset);
    if !report.is_empty() {
        return Err(Error::Validation(report));
    }
    if options.write_vocab_sidecars && !had_sidecars {
        write_vocabulary(root, &dataset.vocab)?;
    }
    Ok(dataset)
}

/// Subdirectories of `root`, sorted lexicographically by name.
fn list_time_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(dirs)
}

fn read_sidecar(path: &Path) -> Result<Option<Interner>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: &str| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: message.to_owned(),
        };
        let mut fields = line.split('\t');
        let (Some(name), Some(id), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("expected `name<TAB>id`"));
        };
        let id: usize = id.parse().map_err(|_| parse_err("id is not an integer"))?;
        pairs.push((id, name.to_owned()));
    }
    pairs.sort();
    if pairs.iter().enumerate().any(|(i, (id, _))| *id != i) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "ids must be dense 0..n-1 without repeats".into(),
        });
    }
    Interner::from_names(pairs.into_iter().map(|(_, n)| n))
        .map(Some)
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "name listed more than once".into(),
        })
}

fn read_triples(
    path: &Path,
    vocab: &mut Vocabulary,
    fixed_entities: bool,
    fixed_relations: bool,
) -> Result<Vec<Triple>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut triples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let head = resolve(&mut vocab.entities, fixed_entities, fields[0])
            .ok_or_else(|| parse_err(format!("unknown entity `{}`", fields[0])))?;
        let relation = resolve(&mut vocab.relations, fixed_relations, fields[1])
            .ok_or_else(|| parse_err(format!("unknown relation `{}`", fields[1])))?;
        let tail = resolve(&mut vocab.entities, fixed_entities, fields[2])
            .ok_or_else(|| parse_err(format!("unknown entity `{}`", fields[2])))?;
        triples.push(Triple::new(head, relation, tail));
    }
    Ok(triples)
}

fn resolve(interner: &mut Interner, fixed: bool, name: &str) -> Option<u32> {
    if fixed {
        interner.id(name)
    } else {
        Some(interner.get_or_insert(name))
    }
}

pub fn write_vocabulary(root: impl AsRef<Path>, vocab: &Vocabulary) -> Result<()> {
    let root = root.as_ref();
    write_interner(&root.join(ENTITY_SIDECAR), &vocab.entities)?;
    write_interner(&root.join(RELATION_SIDECAR), &vocab.relations)
}

fn write_interner(path: &Path, interner: &Interner) -> Result<()> {
    let mut out = String::new();
    for (id, name) in interner.names().iter().enumerate() {
        out.push_str(name);
        out.push('\t');
        out.push_str(&id.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `dataset` in the directory layout read by [`load_dataset`], including
/// vocabulary sidecars. Time directories are zero padded so they sort
/// lexicographically.
pub fn save_dataset(dataset: &GrowingDataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let width = dataset.num_times().to_string().len();
    for snapshot in &dataset.snapshots {
        let dir = root.join(format!("{:0width$}", snapshot.time));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for split in Split::ALL {
            let path = dir.join(split.file_name());
            write_triples(&path, snapshot.split(split), &dataset.vocab)?;
        }
    }
    write_vocabulary(root, &dataset.vocab)
}

fn write_triples(path: &Path, triples: &[Triple], vocab: &Vocabulary) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let name_err = |what: &str, id: u32| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("{what} id {id} has no name in the vocabulary"),
    };
    for t in triples {
        let h = vocab.entities.name(t.head).ok_or_else(|| name_err("entity", t.head))?;
        let r = vocab
            .relations
            .name(t.relation)
            .ok_or_else(|| name_err("relation", t.relation))?;
        let tl = vocab.entities.name(t.tail).ok_or_else(|| name_err("entity", t.tail))?;
        if [h, r, tl].iter().any(|n| n.contains(['\t', '\n'])) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("name in {t} contains a tab or newline"),
            });
        }
        writeln!(w, "{h}\t{r}\t{tl}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
