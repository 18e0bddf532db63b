mod common;

use incde::kg::Triple;
use incde::trainer::{
    batch_objective, distill_entity_loss, DistillBatch, EmbeddingTable, Gradients, ScoreNorm, TeacherStore,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOLERANCE: f64 = 1e-4;

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for norm in [ScoreNorm::L1, ScoreNorm::L2] {
        for dim in [2, 4, 8] {
            for _ in 0..5 {
                let e = common::gradient_check(&mut rng, norm, dim);
                assert!(e.ckge < TOLERANCE, "{norm:?} d={dim}: {e:?}");
                assert!(e.distill < TOLERANCE, "{norm:?} d={dim}: {e:?}");
                assert!(e.total < TOLERANCE, "{norm:?} d={dim}: {e:?}");
            }
        }
    }
}

#[test]
fn distillation_fixpoint_has_zero_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut table = EmbeddingTable::new(4);
    for e in 0..3 {
        table.ensure_entity(e, &mut rng);
    }
    let mut teachers = TeacherStore::new();
    teachers.capture(&table, &[0, 1, 2], 0);
    let weights = [(0, 1.0), (1, 0.5), (2, 2.0)];
    let mut grads = Gradients::new(4);
    let parts = batch_objective(
        &table,
        ScoreNorm::L1,
        1.0,
        &[],
        Some(DistillBatch {
            entities: &weights,
            teachers: &teachers,
            logits: &[0.3, -1.0, 2.0],
            scale: 1.0,
        }),
        Some(&mut grads),
    );
    assert_eq!(parts.distill, 0.0);
    for e in 0..3 {
        assert!(grads.entities.row(e).is_none_or(|g| g.iter().all(|&x| x == 0.0)));
        assert!(grads.logits.row(e).is_none_or(|g| g[0] == 0.0));
    }
}

#[test]
fn entities_without_teachers_get_no_distillation_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut table = EmbeddingTable::new(3);
    for e in 0..2 {
        table.ensure_entity(e, &mut rng);
    }
    let mut teachers = TeacherStore::new();
    teachers.capture(&table, &[0], 0);
    table.entity_mut(0)[0] += 0.5;
    table.entity_mut(1)[0] += 0.5;
    let mut grads = Gradients::new(3);
    batch_objective(
        &table,
        ScoreNorm::L1,
        1.0,
        &[],
        Some(DistillBatch {
            entities: &[(0, 1.0), (1, 1.0)],
            teachers: &teachers,
            logits: &[0.0, 0.0],
            scale: 1.0,
        }),
        Some(&mut grads),
    );
    assert!(grads.entities.row(0).is_some());
    assert!(grads.entities.row(1).is_none());
    assert!(grads.logits.row(1).is_none());
}

#[test]
fn huber_examples() {
    assert_eq!(distill_entity_loss(&[0.0], &[0.5]), 0.125);
    assert_eq!(distill_entity_loss(&[0.0], &[2.0]), 1.5);
    assert_eq!(distill_entity_loss(&[1.0], &[0.0]), 0.5);
}

#[test]
fn scale_multiplies_distillation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut table = EmbeddingTable::new(2);
    table.ensure_entity(0, &mut rng);
    let mut teachers = TeacherStore::new();
    teachers.capture(&table, &[0], 0);
    table.entity_mut(0)[1] -= 0.5;
    let run = |scale| {
        batch_objective(
            &table,
            ScoreNorm::L1,
            1.0,
            &[] as &[(Triple, Triple)],
            Some(DistillBatch {
                entities: &[(0, 1.0)],
                teachers: &teachers,
                logits: &[0.0],
                scale,
            }),
            None,
        )
        .distill
    };
    // lambda 1, gate 0.5, huber 0.125
    assert!((run(1.0) - 0.0625).abs() < 1e-15);
    assert!((run(0.25) - 0.015625).abs() < 1e-15);
}
