mod common;

use std::collections::HashMap;

use incde::kg::Triple;
use incde::ordering::LayerPlan;
use incde::pipeline::train_continual;
use incde::trainer::{
    adam_step, batch_objective, plan_rng, plan_time_step, sample_negatives, train_time_step, training_rng,
    Ablation, EpochRecord, Gradients, IncdeModel, Matrix, Moments, RowGrads, StageMode, TrainConfig,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_config() -> TrainConfig {
    TrainConfig {
        dim: 8,
        margin: 2.0,
        learning_rate: 0.01,
        batch_size: 32,
        negatives: 3,
        epochs: 5,
        max_layer_size: 40,
        early_stop: None,
        ..TrainConfig::default()
    }
}

fn run(config: &TrainConfig, dataset: &incde::kg::GrowingDataset) -> (IncdeModel, Vec<EpochRecord>) {
    let mut model = IncdeModel::new(config.dim);
    let mut log = Vec::new();
    train_continual(&mut model, dataset, config, &mut |r| log.push(r.clone()), &mut |_, _| Ok(())).unwrap();
    (model, log)
}

/// Plain fine-tuning written out directly: shuffled new triples, uniform
/// negatives, margin loss and Adam with per-row moments kept in hash maps.
fn reference_fine_tune(config: &TrainConfig, dataset: &incde::kg::GrowingDataset) -> (IncdeModel, Vec<f64>) {
    let mut model = IncdeModel::new(config.dim);
    let mut moments: HashMap<(bool, usize), (Vec<f64>, Vec<f64>)> = HashMap::new();
    let mut step = 0i32;
    let mut losses = Vec::new();
    for time in 1..=dataset.num_times() {
        let snapshot = dataset.snapshot(time).unwrap();
        let mut rng = training_rng(config.seed, time);
        for &e in &snapshot.entities {
            model.table.ensure_entity(e, &mut rng);
        }
        for &r in &snapshot.relations {
            model.table.ensure_relation(r, &mut rng);
        }
        let mut order = dataset.delta(time).unwrap().train.clone();
        order.shuffle(&mut plan_rng(config.seed, time));
        let candidates: Vec<u32> = snapshot.entities.iter().copied().collect();
        for _ in 0..config.epochs {
            let (mut sum, mut batches) = (0.0, 0);
            for batch in order.chunks(config.batch_size) {
                let mut pairs: Vec<(Triple, Triple)> = Vec::new();
                for pos in batch {
                    for neg in sample_negatives(pos, config.negatives, &candidates, &mut rng, &snapshot.cumulative).unwrap() {
                        pairs.push((*pos, neg));
                    }
                }
                let mut grads = Gradients::new(config.dim);
                let parts = batch_objective(&model.table, config.norm, config.margin, &pairs, None, Some(&mut grads));
                step += 1;
                let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8, config.learning_rate);
                for (is_entity, g, params) in [
                    (true, &grads.entities, &mut model.table.entities),
                    (false, &grads.relations, &mut model.table.relations),
                ] {
                    for &i in g.touched() {
                        let g = g.row(i).unwrap();
                        if g.iter().all(|&x| x == 0.0) {
                            continue;
                        }
                        let (m, v) = moments
                            .entry((is_entity, i))
                            .or_insert_with(|| (vec![0.0; g.len()], vec![0.0; g.len()]));
                        let p = params.row_mut(i);
                        for j in 0..g.len() {
                            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                            let m_hat = m[j] / (1.0 - b1.powi(step));
                            let v_hat = v[j] / (1.0 - b2.powi(step));
                            p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
                        }
                    }
                }
                sum += parts.ckge;
                batches += 1;
            }
            losses.push(sum / batches as f64);
        }
        model.time = time;
    }
    (model, losses)
}

#[test]
fn fine_tune_variant_equals_plain_fine_tuning() {
    let dataset = common::toy_dataset(3, 60, 5, 300, 3);
    let config = TrainConfig {
        ablation: Ablation::FINE_TUNE,
        ..small_config()
    };
    let (model, log) = run(&config, &dataset);
    let (reference, losses) = reference_fine_tune(&config, &dataset);
    let traced: Vec<f64> = log.iter().map(|r| r.l_ckge).collect();
    assert_eq!(traced, losses);
    assert!(log.iter().all(|r| r.l_distill == 0.0 && r.stage == 2));
    assert_eq!(model.table, reference.table);
}

#[test]
fn full_freeze_keeps_old_rows() {
    let dataset = common::toy_dataset(4, 60, 5, 300, 3);
    for stage_mode in [StageMode::PerLayer, StageMode::PerTimestep] {
        let config = TrainConfig {
            stage1_fraction: 1.0,
            stage_mode,
            ..small_config()
        };
        let (model, _) = run(&config, &dataset);
        // train time 3 on top of a model trained through time 2 only
        let mut before = IncdeModel::new(config.dim);
        let mut two = dataset.clone();
        two.snapshots.truncate(2);
        two.deltas.truncate(2);
        train_continual(&mut before, &two, &config, &mut |_| {}, &mut |_, _| Ok(())).unwrap();
        let mut after = before.clone();
        let (scores, plan) = plan_time_step(&dataset, 3, &config).unwrap();
        train_time_step(&mut after, &dataset, 3, &plan, &scores, &config, &mut |_| {}).unwrap();
        for e in dataset.old_entities(3) {
            assert_eq!(before.table.entity(e), after.table.entity(e));
        }
        for r in dataset.old_relations(3) {
            assert_eq!(before.table.relation(r), after.table.relation(r));
        }
        assert_eq!(model.table, after.table);
    }
}

#[test]
fn stage_one_epochs_are_frozen_and_logged() {
    let dataset = common::toy_dataset(5, 60, 5, 300, 2);
    let config = TrainConfig {
        stage1_fraction: 0.4,
        ..small_config()
    };
    let (_, log) = run(&config, &dataset);
    for r in &log {
        assert_eq!(r.stage, if r.epoch < 2 { 1 } else { 2 });
        assert!(r.l_ckge.is_finite() && r.l_distill >= 0.0);
        assert!((0.0..=1.0).contains(&r.w_min) && r.w_min <= r.w_mean && r.w_mean <= r.w_max);
    }
    let no_ts = TrainConfig {
        ablation: Ablation {
            no_ts: true,
            ..Ablation::FULL
        },
        ..config
    };
    assert!(run(&no_ts, &dataset).1.iter().all(|r| r.stage == 2));
}

#[test]
fn zero_learning_rate_leaves_model_unchanged() {
    let dataset = common::toy_dataset(6, 60, 5, 300, 2);
    let config = TrainConfig {
        epochs: 3,
        ..small_config()
    };
    let mut model = IncdeModel::new(config.dim);
    let mut one = dataset.clone();
    one.snapshots.truncate(1);
    one.deltas.truncate(1);
    train_continual(&mut model, &one, &config, &mut |_| {}, &mut |_, _| Ok(())).unwrap();
    let frozen = TrainConfig {
        learning_rate: 0.0,
        gate_learning_rate: Some(0.0),
        ..config
    };
    let mut next = model.clone();
    let (scores, plan) = plan_time_step(&dataset, 2, &frozen).unwrap();
    train_time_step(&mut next, &dataset, 2, &plan, &scores, &frozen, &mut |_| {}).unwrap();
    for e in dataset.old_entities(2) {
        assert_eq!(model.table.entity(e), next.table.entity(e));
    }
}

#[test]
fn training_is_deterministic() {
    let dataset = common::toy_dataset(7, 60, 5, 300, 3);
    let config = small_config();
    let (a, log_a) = run(&config, &dataset);
    let (b, log_b) = run(&config, &dataset);
    assert_eq!(a, b);
    let strip = |log: Vec<EpochRecord>| -> Vec<(f64, f64, f64)> {
        log.into_iter().map(|r| (r.l_ckge, r.l_distill, r.w_mean)).collect()
    };
    assert_eq!(strip(log_a), strip(log_b));
    let (c, _) = run(&TrainConfig { seed: 1, ..config }, &dataset);
    assert_ne!(a.table, c.table);
}

#[test]
fn distillation_is_active_only_with_teachers() {
    let dataset = common::toy_dataset(8, 60, 5, 300, 3);
    let (_, log) = run(&small_config(), &dataset);
    assert!(log.iter().any(|r| r.l_distill > 0.0));
    let no_id = TrainConfig {
        ablation: Ablation {
            no_id: true,
            ..Ablation::FULL
        },
        ..small_config()
    };
    assert!(run(&no_id, &dataset).1.iter().all(|r| r.l_distill == 0.0));
}

#[test]
fn bad_inputs_are_rejected() {
    let dataset = common::toy_dataset(9, 60, 5, 300, 3);
    let config = small_config();
    let mut model = IncdeModel::new(config.dim);
    let (scores, plan) = plan_time_step(&dataset, 2, &config).unwrap();
    // model is at time 0
    assert!(train_time_step(&mut model, &dataset, 2, &plan, &scores, &config, &mut |_| {}).is_err());
    let (scores1, mut plan1) = plan_time_step(&dataset, 1, &config).unwrap();
    plan1.layers[0].triples.pop();
    plan1.layers[0].importance.pop();
    let err = train_time_step(&mut model, &dataset, 1, &plan1, &scores1, &config, &mut |_| {}).unwrap_err();
    assert!(matches!(err, incde::Error::InvalidPlan(_)));
    let mut wrong_dim = IncdeModel::new(4);
    let (_, plan1) = plan_time_step(&dataset, 1, &config).unwrap();
    assert!(matches!(
        train_time_step(&mut wrong_dim, &dataset, 1, &plan1, &scores1, &config, &mut |_| {}),
        Err(incde::Error::DimensionMismatch { .. })
    ));
    let shuffled = LayerPlan::shuffled(&dataset.delta(1).unwrap().train, &scores1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(train_time_step(&mut model, &dataset, 1, &shuffled, &scores1, &config, &mut |_| {}).is_ok());
}

#[test]
fn adam_examples() {
    let mut params = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
    let mut moments = Moments::new(1);
    let config = incde::trainer::AdamConfig::default();
    let mut g = RowGrads::new(1);
    g.row_mut(0)[0] = 0.0;
    adam_step(&mut params, &g, &mut moments, 1, 0.1, &config);
    assert_eq!(params.row(0)[0], 1.0);
    g.row_mut(0)[0] = 0.3;
    adam_step(&mut params, &g, &mut moments, 1, 0.1, &config);
    let closed = 1.0 - 0.1 * 0.3 / (0.3 + 1e-8);
    assert!((params.row(0)[0] - closed).abs() < 1e-12);
    let before = params.row(0)[0];
    adam_step(&mut params, &g, &mut moments, 2, 0.1, &config);
    assert!(params.row(0)[0] < before);
}

#[test]
fn negatives_never_equal_the_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let candidates = [0, 1, 2, 3, 4];
    let known = std::collections::HashSet::new();
    for h in 0..5 {
        for t in 0..5 {
            let pos = Triple::new(h, 0, t);
            let negs = sample_negatives(&pos, 10, &candidates, &mut rng, &known).unwrap();
            assert_eq!(negs.len(), 10);
            assert!(negs.iter().all(|n| *n != pos));
        }
    }
    let only = sample_negatives(
        &Triple::new(0, 0, 1),
        1,
        &[0, 1],
        &mut ChaCha8Rng::seed_from_u64(2),
        &known,
    )
    .unwrap();
    assert!(only[0] == Triple::new(0, 0, 0) || only[0] == Triple::new(1, 0, 1));
    let draw = |seed| sample_negatives(&Triple::new(0, 0, 1), 10, &candidates, &mut ChaCha8Rng::seed_from_u64(seed), &known).unwrap();
    assert_eq!(draw(5), draw(5));
}
