use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, OptimizerState};
use super::config::{DistillReduction, StageMode, TrainConfig};
use super::distill::{sigmoid, TeacherStore};
use super::loss::{batch_objective, DistillBatch, Gradients};
use super::model::{EmbeddingTable, Matrix};
use super::negative::sample_negatives;
use crate::error::{Error, Result};
use crate::eval::{evaluate_snapshot, MetricsReport};
use crate::kg::{EntityId, GrowingDataset, Triple};
use crate::ordering::{build_layer_plan, CentralityScores, Layer, LayerPlan};

const STREAM_TRAIN: u64 = 0x7472_6169_6e00_0000;
const STREAM_PLAN: u64 = 0x706c_616e_0000_0000;

/// Seed for an independent random stream of one time step.
pub fn stream_seed(seed: u64, time: usize, stream: u64) -> u64 {
    let mut z = seed ^ stream ^ (time as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream used by [`train_time_step`] for time `time`.
pub fn training_rng(seed: u64, time: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, time, STREAM_TRAIN))
}

/// Random stream used to shuffle the single layer when hierarchical ordering is off.
pub fn plan_rng(seed: u64, time: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, time, STREAM_PLAN))
}

/// Trainable state carried from one time step to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct IncdeModel {
    /// Last completed time step, 0 before any training.
    pub time: usize,
    pub table: EmbeddingTable,
    /// Distillation gate logits, one row per entity.
    pub logits: Matrix,
    pub optimizer: OptimizerState,
}

impl IncdeModel {
    pub fn new(dim: usize) -> Self {
        IncdeModel {
            time: 0,
            table: EmbeddingTable::new(dim),
            logits: Matrix::zeros(0, 1),
            optimizer: OptimizerState::new(dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub time: usize,
    /// 1-based layer index.
    pub layer: usize,
    pub epoch: usize,
    /// 1 while old rows are frozen, else 2.
    pub stage: u8,
    pub l_ckge: f64,
    pub l_distill: f64,
    pub w_mean: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeStepReport {
    pub time: usize,
    pub layers: usize,
    pub records: Vec<EpochRecord>,
}

/// New training triples of `time`, their centralities, and the layer plan.
pub fn plan_time_step(
    dataset: &GrowingDataset,
    time: usize,
    config: &TrainConfig,
) -> Result<(CentralityScores, LayerPlan)> {
    let delta = dataset
        .delta(time)
        .ok_or_else(|| Error::Config(format!("dataset has no time {time}")))?;
    let scores = CentralityScores::compute_with(&delta.train, &config.betweenness);
    let plan = if config.ablation.no_ho {
        LayerPlan::shuffled(&delta.train, &scores, &mut plan_rng(config.seed, time))?
    } else {
        build_layer_plan(
            &delta.train,
            &dataset.old_entities(time),
            config.max_layer_size,
            &scores,
        )?
    };
    Ok((scores, plan))
}

/// Read-only inputs shared by every layer of a time step.
pub struct LayerContext<'a> {
    pub time: usize,
    pub candidates: &'a [EntityId],
    pub known_true: &'a HashSet<Triple>,
    pub old_entities: &'a [bool],
    pub old_relations: &'a [bool],
    pub scores: &'a CentralityScores,
    /// Validation triples for early stopping.
    pub valid: &'a [Triple],
}

/// Trains one layer for the epochs in `epochs`; epochs below `stage1_end` keep
/// old rows frozen. Teachers are read but not modified.
#[allow(clippy::too_many_arguments)]
pub fn train_layer(
    model: &mut IncdeModel,
    teachers: &TeacherStore,
    layer: &Layer,
    layer_index: usize,
    ctx: &LayerContext<'_>,
    config: &TrainConfig,
    epochs: Range<usize>,
    stage1_end: usize,
    rng: &mut ChaCha8Rng,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    let dim = model.table.dim();
    model.logits.ensure_rows(model.table.entities.rows());

    // lambda_k for the layer's entities, fixed for the whole layer.
    let base: HashMap<EntityId, f64> = if config.ablation.no_id {
        HashMap::new()
    } else {
        layer
            .entities()
            .into_iter()
            .filter(|&e| teachers.contains(e))
            .map(|e| (e, ctx.scores.entity_importance(e)))
            .filter(|&(_, w)| w != 0.0)
            .collect()
    };
    let mut gated: Vec<EntityId> = base.keys().copied().collect();
    gated.sort_unstable();

    let mut grads = Gradients::new(dim);
    let mut order: Vec<usize> = (0..layer.len()).collect();
    let mut records = Vec::new();
    let mut best_valid = f64::NEG_INFINITY;
    let mut stale = 0;

    for epoch in epochs {
        let started = Instant::now();
        let frozen = epoch < stage1_end;
        if config.reshuffle_each_epoch {
            order.shuffle(rng);
        }
        let (mut sum_ckge, mut sum_distill, mut batches) = (0.0, 0.0, 0usize);

        for batch in order.chunks(config.batch_size) {
            let mut pairs = Vec::with_capacity(batch.len() * config.negatives);
            let mut batch_entities = BTreeSet::new();
            for &i in batch {
                let pos = layer.triples[i];
                for neg in sample_negatives(&pos, config.negatives, ctx.candidates, rng, ctx.known_true)? {
                    pairs.push((pos, neg));
                }
                batch_entities.insert(pos.head);
                batch_entities.insert(pos.tail);
            }
            let distill_entities: Vec<(EntityId, f64)> = batch_entities
                .iter()
                .filter_map(|e| base.get(e).map(|&w| (*e, w)))
                .collect();

            grads.clear();
            let parts = batch_objective(
                &model.table,
                config.norm,
                config.margin,
                &pairs,
                (!distill_entities.is_empty()).then_some(DistillBatch {
                    entities: &distill_entities,
                    teachers,
                    logits: model.logits.as_slice(),
                    scale: match config.distill_reduction {
                        DistillReduction::PerPair => 1.0 / pairs.len().max(1) as f64,
                        DistillReduction::Sum => 1.0,
                    },
                }),
                Some(&mut grads),
            );
            let non_finite = |what: &str| Error::NonFinite {
                what: what.to_owned(),
                time: ctx.time,
                layer: layer_index,
                epoch,
            };
            if !parts.total().is_finite() {
                return Err(non_finite("loss"));
            }
            if !grads.is_finite() {
                return Err(non_finite("gradient"));
            }
            if frozen {
                grads
                    .entities
                    .retain(|i| !ctx.old_entities.get(i).copied().unwrap_or(false));
                grads
                    .relations
                    .retain(|i| !ctx.old_relations.get(i).copied().unwrap_or(false));
            }

            let opt = &mut model.optimizer;
            opt.step += 1;
            let lr = config.learning_rate;
            adam_step(&mut model.table.entities, &grads.entities, &mut opt.entities, opt.step, lr, &opt.config);
            adam_step(&mut model.table.relations, &grads.relations, &mut opt.relations, opt.step, lr, &opt.config);
            let gate_lr = config.gate_learning_rate.unwrap_or(lr);
            adam_step(&mut model.logits, &grads.logits, &mut opt.logits, opt.step, gate_lr, &opt.config);

            if config.normalize_entities {
                for &i in grads.entities.touched() {
                    let row = model.table.entities.row_mut(i);
                    let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if n > 1.0 {
                        row.iter_mut().for_each(|x| *x /= n);
                    }
                }
            }
            let touched_finite = grads
                .entities
                .touched()
                .iter()
                .all(|&i| model.table.entities.row(i).iter().all(|x| x.is_finite()))
                && grads
                    .relations
                    .touched()
                    .iter()
                    .all(|&i| model.table.relations.row(i).iter().all(|x| x.is_finite()))
                && model.logits.as_slice().iter().all(|x| x.is_finite());
            if !touched_finite {
                return Err(non_finite("parameters"));
            }

            sum_ckge += parts.ckge;
            sum_distill += parts.distill;
            batches += 1;
        }

        let (w_mean, w_min, w_max) = gate_stats(&gated, &model.logits);
        let n = batches.max(1) as f64;
        let record = EpochRecord {
            time: ctx.time,
            layer: layer_index,
            epoch,
            stage: if frozen { 1 } else { 2 },
            l_ckge: sum_ckge / n,
            l_distill: sum_distill / n,
            w_mean,
            w_min,
            w_max,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        observer(&record);
        records.push(record);

        if let Some(es) = config.early_stop {
            if !ctx.valid.is_empty() && (epoch + 1) % es.every == 0 {
                let mrr = validation_mrr(&model.table, ctx, config)?;
                if mrr > best_valid {
                    best_valid = mrr;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= es.patience {
                        break;
                    }
                }
            }
        }
    }
    Ok(records)
}

fn validation_mrr(table: &EmbeddingTable, ctx: &LayerContext<'_>, config: &TrainConfig) -> Result<f64> {
    let report: MetricsReport =
        evaluate_snapshot(table, config.norm, ctx.valid, ctx.candidates, Some(ctx.known_true))?;
    Ok(report.mrr)
}

fn gate_stats(entities: &[EntityId], logits: &Matrix) -> (f64, f64, f64) {
    if entities.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for &e in entities {
        let w = sigmoid(logits.row(e as usize)[0]);
        sum += w;
        min = min.min(w);
        max = max.max(w);
    }
    (sum / entities.len() as f64, min, max)
}

/// Trains time step `time` starting from the model of `time - 1`.
///
/// New entity and relation rows are initialized (ascending id order), the
/// teacher store is seeded with every old entity as layer 0, and the layers of
/// `plan` are trained in order. After each layer, the teachers of its entities
/// are replaced by their post-layer vectors.
pub fn train_time_step(
    model: &mut IncdeModel,
    dataset: &GrowingDataset,
    time: usize,
    plan: &LayerPlan,
    scores: &CentralityScores,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<TimeStepReport> {
    config.validate()?;
    let snapshot = dataset
        .snapshot(time)
        .ok_or_else(|| Error::Config(format!("dataset has no time {time}")))?;
    let delta = dataset.delta(time).expect("delta exists for every snapshot");
    if model.time + 1 != time {
        return Err(Error::Config(format!(
            "model is at time {}, cannot train time {time}",
            model.time
        )));
    }
    if model.table.dim() != config.dim {
        return Err(Error::DimensionMismatch {
            left: model.table.dim(),
            right: config.dim,
        });
    }
    plan.check_partition(&delta.train)?;

    let old_entities = dataset.old_entities(time);
    let old_relations = dataset.old_relations(time);
    if let Some(e) = old_entities.iter().find(|&&e| !model.table.has_entity(e)) {
        return Err(Error::Config(format!("previous model lacks old entity {e}")));
    }
    if let Some(r) = old_relations.iter().find(|&&r| !model.table.has_relation(r)) {
        return Err(Error::Config(format!("previous model lacks old relation {r}")));
    }

    let mut rng = training_rng(config.seed, time);
    for &e in &snapshot.entities {
        model.table.ensure_entity(e, &mut rng);
    }
    for &r in &snapshot.relations {
        model.table.ensure_relation(r, &mut rng);
    }
    model.logits.ensure_rows(model.table.entities.rows());
    if config.reset_gate_each_step {
        model.logits.as_mut_slice().fill(0.0);
        let m = &mut model.optimizer.logits;
        m.first.as_mut_slice().fill(0.0);
        m.second.as_mut_slice().fill(0.0);
    }

    let mut old_entity_mask = vec![false; model.table.entities.rows()];
    old_entities.iter().for_each(|&e| old_entity_mask[e as usize] = true);
    let mut old_relation_mask = vec![false; model.table.relations.rows()];
    old_relations.iter().for_each(|&r| old_relation_mask[r as usize] = true);

    let mut teachers = TeacherStore::new();
    teachers.capture(&model.table, &old_entities, 0);

    let candidates: Vec<EntityId> = snapshot.entities.iter().copied().collect();
    let ctx = LayerContext {
        time,
        candidates: &candidates,
        known_true: &snapshot.cumulative,
        old_entities: &old_entity_mask,
        old_relations: &old_relation_mask,
        scores,
        valid: &delta.valid,
    };

    let stage1 = config.stage1_epochs();
    let mut records = Vec::new();
    // (first, end) epoch bounds of each pass over the layers.
    let passes: &[(usize, usize)] = match config.stage_mode {
        StageMode::PerLayer => &[(0, config.epochs)],
        StageMode::PerTimestep => &[(0, stage1), (stage1, config.epochs)],
    };
    for &(first, end) in passes {
        let epochs = first..end;
        if epochs.is_empty() {
            continue;
        }
        for (j, layer) in plan.layers.iter().enumerate() {
            records.extend(train_layer(
                model,
                &teachers,
                layer,
                j + 1,
                &ctx,
                config,
                epochs.clone(),
                stage1,
                &mut rng,
                observer,
            )?);
            teachers.capture(&model.table, &layer.entities(), j + 1);
        }
    }

    if !model.table.is_finite() {
        return Err(Error::NonFinite {
            what: "embeddings".into(),
            time,
            layer: plan.layers.len(),
            epoch: config.epochs,
        });
    }
    model.time = time;
    Ok(TimeStepReport {
        time,
        layers: plan.layers.len(),
        records,
    })
}
