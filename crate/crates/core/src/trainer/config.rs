use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::ScoreNorm;
use crate::error::{Error, Result};
use crate::ordering::{BetweennessConfig, BetweennessScale};

/// Switches that remove one component each. All three together give plain fine-tuning.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ablation {
    /// Learn the new triples as one randomly shuffled layer.
    pub no_ho: bool,
    /// Force every distillation weight to zero.
    pub no_id: bool,
    /// Skip the stage that freezes old entities and relations.
    pub no_ts: bool,
}

impl Ablation {
    pub const FULL: Ablation = Ablation {
        no_ho: false,
        no_id: false,
        no_ts: false,
    };
    pub const FINE_TUNE: Ablation = Ablation {
        no_ho: true,
        no_id: true,
        no_ts: true,
    };

    pub fn name(&self) -> &'static str {
        match (self.no_ho, self.no_id, self.no_ts) {
            (false, false, false) => "full",
            (true, false, false) => "no_ho",
            (false, true, false) => "no_id",
            (false, false, true) => "no_ts",
            (true, true, true) => "fine_tune",
            _ => "custom",
        }
    }
}

/// Where the freeze stage is placed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageMode {
    /// Each layer runs its first `floor(rho * E)` epochs frozen, then the rest unfrozen.
    #[default]
    PerLayer,
    /// All layers run their frozen epochs first, then all layers run the unfrozen epochs.
    PerTimestep,
}

impl std::str::FromStr for StageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_layer" => Ok(StageMode::PerLayer),
            "per_timestep" => Ok(StageMode::PerTimestep),
            other => Err(Error::Config(format!("unknown stage mode `{other}`"))),
        }
    }
}

/// How the per-batch distillation sum is weighted against the mean hinge loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistillReduction {
    /// Divide by the number of (positive, negative) pairs in the batch, the
    /// same normalizer as the hinge term, so the batch objective is the
    /// summed objective restricted to the batch and averaged.
    #[default]
    PerPair,
    /// Add the raw sum.
    Sum,
}

impl std::str::FromStr for DistillReduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_pair" => Ok(DistillReduction::PerPair),
            "sum" => Ok(DistillReduction::Sum),
            other => Err(Error::Config(format!("unknown distill reduction `{other}`"))),
        }
    }
}

/// Stop a layer early when validation MRR has not improved for `patience` checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub every: usize,
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    /// Learning rate of the distillation gate logits; `None` uses `learning_rate`.
    pub gate_learning_rate: Option<f64>,
    pub batch_size: usize,
    /// Negatives drawn per positive triple.
    pub negatives: usize,
    /// Epochs per layer.
    pub epochs: usize,
    /// Fraction of each layer's epochs run with old rows frozen.
    pub stage1_fraction: f64,
    pub max_layer_size: usize,
    pub norm: ScoreNorm,
    pub seed: u64,
    pub ablation: Ablation,
    pub stage_mode: StageMode,
    pub distill_reduction: DistillReduction,
    /// Zero the gate logits and their optimizer moments at the start of every time step.
    pub reset_gate_each_step: bool,
    /// Reshuffle each layer's triples every epoch instead of batching them in plan order.
    pub reshuffle_each_epoch: bool,
    /// Project touched entity rows back into the unit L2 ball after each step.
    pub normalize_entities: bool,
    pub early_stop: Option<EarlyStop>,
    pub betweenness: BetweennessConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 200,
            margin: 8.0,
            learning_rate: 1e-4,
            gate_learning_rate: None,
            batch_size: 1024,
            negatives: 10,
            epochs: 100,
            stage1_fraction: 0.2,
            max_layer_size: 1024,
            norm: ScoreNorm::L1,
            seed: 0,
            ablation: Ablation::FULL,
            stage_mode: StageMode::PerLayer,
            distill_reduction: DistillReduction::PerPair,
            reset_gate_each_step: true,
            reshuffle_each_epoch: false,
            normalize_entities: false,
            early_stop: Some(EarlyStop {
                every: 10,
                patience: 3,
            }),
            betweenness: BetweennessConfig {
                scale: BetweennessScale::Normalized,
                ..BetweennessConfig::default()
            },
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("batch_size", self.batch_size),
            ("negatives", self.negatives),
            ("max_layer_size", self.max_layer_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Config("margin must be positive".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be non-negative".into()));
        }
        if let Some(lr) = self.gate_learning_rate {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::Config("gate learning rate must be non-negative".into()));
            }
        }
        if !(0.0..=1.0).contains(&self.stage1_fraction) {
            return Err(Error::Config("stage1_fraction must lie in [0, 1]".into()));
        }
        if let Some(es) = self.early_stop {
            if es.every == 0 {
                return Err(Error::Config("early stop interval must be positive".into()));
            }
        }
        Ok(())
    }

    /// Number of frozen epochs per layer: `floor(rho * E)`, or 0 without two-stage training.
    pub fn stage1_epochs(&self) -> usize {
        if self.ablation.no_ts {
            0
        } else {
            ((self.stage1_fraction * self.epochs as f64).floor() as usize).min(self.epochs)
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
