use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordering::{BetweennessConfig, BetweennessScale};
use crate::trainer::{Ablation, DistillReduction, EarlyStop, ScoreNorm, StageMode, TrainConfig};

/// Which evaluation modes to emit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalChoice {
    #[default]
    Filtered,
    Raw,
    Both,
}

/// Flat run configuration, read from a TOML file of `key = value` lines.
///
/// Keys mirror [`TrainConfig`] with the nested parts flattened:
/// `early_stop_every = 0` disables early stopping, `betweenness_scale`,
/// `betweenness_sample_above` and `betweenness_pivots` configure centrality,
/// and `no_ho`/`no_id`/`no_ts` are the ablation switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub eval_mode: EvalChoice,

    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub gate_learning_rate: Option<f64>,
    pub batch_size: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub stage1_fraction: f64,
    pub max_layer_size: usize,
    pub norm: ScoreNorm,
    pub no_ho: bool,
    pub no_id: bool,
    pub no_ts: bool,
    pub stage_mode: StageMode,
    pub distill_reduction: DistillReduction,
    pub reset_gate_each_step: bool,
    pub reshuffle_each_epoch: bool,
    pub normalize_entities: bool,
    pub early_stop_every: usize,
    pub early_stop_patience: usize,
    pub betweenness_scale: BetweennessScale,
    pub betweenness_sample_above: Option<usize>,
    pub betweenness_pivots: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let (every, patience) = t.early_stop.map_or((0, 0), |e| (e.every, e.patience));
        RunConfig {
            dataset: None,
            out: None,
            seeds: vec![0],
            eval_mode: EvalChoice::Filtered,
            dim: t.dim,
            margin: t.margin,
            learning_rate: t.learning_rate,
            gate_learning_rate: t.gate_learning_rate,
            batch_size: t.batch_size,
            negatives: t.negatives,
            epochs: t.epochs,
            stage1_fraction: t.stage1_fraction,
            max_layer_size: t.max_layer_size,
            norm: t.norm,
            no_ho: t.ablation.no_ho,
            no_id: t.ablation.no_id,
            no_ts: t.ablation.no_ts,
            stage_mode: t.stage_mode,
            distill_reduction: t.distill_reduction,
            reset_gate_each_step: t.reset_gate_each_step,
            reshuffle_each_epoch: t.reshuffle_each_epoch,
            normalize_entities: t.normalize_entities,
            early_stop_every: every,
            early_stop_patience: patience,
            betweenness_scale: t.betweenness.scale,
            betweenness_sample_above: t.betweenness.sample_above,
            betweenness_pivots: t.betweenness.pivots,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn ablation(&self) -> Ablation {
        Ablation {
            no_ho: self.no_ho,
            no_id: self.no_id,
            no_ts: self.no_ts,
        }
    }

    pub fn set_ablation(&mut self, ablation: Ablation) {
        self.no_ho = ablation.no_ho;
        self.no_id = ablation.no_id;
        self.no_ts = ablation.no_ts;
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset given (--dataset or `dataset` key)".into()))
    }

    pub fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("no output directory given (--out or `out` key)".into()))
    }

    /// Training configuration for one seed.
    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let early_stop = match (self.early_stop_every, self.early_stop_patience) {
            (0, _) => None,
            (every, patience) => Some(EarlyStop { every, patience }),
        };
        let config = TrainConfig {
            dim: self.dim,
            margin: self.margin,
            learning_rate: self.learning_rate,
            gate_learning_rate: self.gate_learning_rate,
            batch_size: self.batch_size,
            negatives: self.negatives,
            epochs: self.epochs,
            stage1_fraction: self.stage1_fraction,
            max_layer_size: self.max_layer_size,
            norm: self.norm,
            seed,
            ablation: self.ablation(),
            stage_mode: self.stage_mode,
            distill_reduction: self.distill_reduction,
            reset_gate_each_step: self.reset_gate_each_step,
            reshuffle_each_epoch: self.reshuffle_each_epoch,
            normalize_entities: self.normalize_entities,
            early_stop,
            betweenness: BetweennessConfig {
                scale: self.betweenness_scale,
                sample_above: self.betweenness_sample_above,
                pivots: self.betweenness_pivots,
                seed,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        self.train_config(self.seeds[0]).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_train_config() {
        let rc = RunConfig::default();
        let mut expected = TrainConfig::default();
        expected.betweenness.seed = 0;
        assert_eq!(rc.train_config(0).unwrap(), expected);
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let rc: RunConfig = toml::from_str("dim = 16\nseeds = [1, 2]\nno_id = true\nstage_mode = \"per_timestep\"\n").unwrap();
        assert_eq!(rc.dim, 16);
        assert_eq!(rc.seeds, vec![1, 2]);
        assert!(rc.no_id);
        assert_eq!(rc.stage_mode, StageMode::PerTimestep);
        let back: RunConfig = toml::from_str(&rc.to_toml()).unwrap();
        assert_eq!(back, rc);
        assert!(toml::from_str::<RunConfig>("dimension = 3\n").is_err());
    }
}
