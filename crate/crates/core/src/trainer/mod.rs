//! TransE training with layer-wise ordering, distillation and two-stage freezing.

pub mod adam;
pub mod checkpoint;
pub mod config;
pub mod distill;
pub mod loss;
pub mod model;
pub mod negative;
pub mod train;

pub use adam::{adam_step, AdamConfig, Moments, OptimizerState, RowGrads};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{Ablation, DistillReduction, EarlyStop, StageMode, TrainConfig};
pub use distill::{compute_distill_weights, distill_entity_loss, layer_distill_loss, sigmoid, DistillWeight, Teacher, TeacherStore};
pub use loss::{batch_objective, margin_loss, DistillBatch, Gradients, LossParts};
pub use model::{transe_score, EmbeddingTable, Matrix, ScoreNorm};
pub use negative::{sample_negatives, MAX_FILTER_ATTEMPTS};
pub use train::{
    plan_rng, plan_time_step, train_layer, train_time_step, training_rng, EpochRecord, IncdeModel, LayerContext,
    TimeStepReport,
};
