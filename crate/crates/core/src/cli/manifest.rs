use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::trainer::{Ablation, TrainConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
pub const CHECKPOINT_DIR: &str = "checkpoints";

pub fn checkpoint_name(time: usize) -> String {
    format!("{CHECKPOINT_DIR}/t{time}.ckpt")
}

/// One trained time step. Paths are relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub time: usize,
    pub checkpoint: PathBuf,
    pub wall_ms: f64,
    pub layer_sizes: Vec<usize>,
}

/// Everything needed to reproduce or audit one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset: PathBuf,
    /// sha256 over the dataset's files, in sorted relative-path order.
    pub dataset_fingerprint: String,
    pub seed: u64,
    pub config_hash: String,
    pub variant: String,
    pub ablation: Ablation,
    pub config: TrainConfig,
    pub log: PathBuf,
    pub steps: Vec<StepEntry>,
    #[serde(default)]
    pub reports: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(dataset: &Path, fingerprint: String, config: &TrainConfig) -> Self {
        RunManifest {
            dataset: dataset.to_path_buf(),
            dataset_fingerprint: fingerprint,
            seed: config.seed,
            config_hash: config.hash(),
            variant: config.ablation.name().to_owned(),
            ablation: config.ablation,
            config: config.clone(),
            log: PathBuf::from(TRAIN_LOG_FILE),
            steps: Vec::new(),
            reports: Vec::new(),
        }
    }

    pub fn last_time(&self) -> usize {
        self.steps.last().map_or(0, |s| s.time)
    }

    pub fn step(&self, time: usize) -> Option<&StepEntry> {
        self.steps.iter().find(|s| s.time == time)
    }

    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Writes `manifest.json` after checking that every referenced file exists.
    pub fn save(&self, run_dir: &Path) -> Result<()> {
        let referenced = std::iter::once(&self.log)
            .chain(self.steps.iter().map(|s| &s.checkpoint))
            .chain(&self.reports);
        for rel in referenced {
            let full = run_dir.join(rel);
            if !full.is_file() {
                return Err(Error::Config(format!(
                    "manifest references missing file {}",
                    full.display()
                )));
            }
        }
        let path = run_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    pub fn add_report(&mut self, rel: PathBuf) {
        if !self.reports.contains(&rel) {
            self.reports.push(rel);
        }
    }
}

/// sha256 over `relative path \0 contents \0` of every file under `root`,
/// visited in sorted path order.
pub fn dataset_fingerprint(root: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    files.sort();
    let mut hasher = Sha256::new();
    for rel in files {
        let full = root.join(&rel);
        let bytes = fs::read(&full).map_err(|e| Error::io(&full, e))?;
        hasher.update(rel.to_string_lossy().as_bytes());
        hasher.update([0]);
        hasher.update(&bytes);
        hasher.update([0]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).expect("under root").to_path_buf());
        }
    }
    Ok(())
}
