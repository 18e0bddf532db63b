use super::adam::RowGrads;
use super::distill::{add_distill_entity_grad, distill_entity_loss, sigmoid, TeacherStore};
use super::model::{score_residual_grad, EmbeddingTable, ScoreNorm};
use crate::kg::{EntityId, Triple};

/// Mean hinge `max(0, f(pos) - f(neg) + margin)` over `(f(pos), f(neg))` pairs.
pub fn margin_loss(pairs: &[(f64, f64)], margin: f64) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|(p, n)| (p - n + margin).max(0.0))
        .sum();
    total / pairs.len() as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub ckge: f64,
    pub distill: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.ckge + self.distill
    }
}

/// Gradient buffers for every trainable group.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub entities: RowGrads,
    pub relations: RowGrads,
    /// One column: the distillation gate logits.
    pub logits: RowGrads,
}

impl Gradients {
    pub fn new(dim: usize) -> Self {
        Gradients {
            entities: RowGrads::new(dim),
            relations: RowGrads::new(dim),
            logits: RowGrads::new(1),
        }
    }

    pub fn clear(&mut self) {
        self.entities.clear();
        self.relations.clear();
        self.logits.clear();
    }

    pub fn is_finite(&self) -> bool {
        self.entities.is_finite() && self.relations.is_finite() && self.logits.is_finite()
    }
}

/// Distillation inputs for one mini-batch: `(entity, lambda_k)` pairs plus the gate logits.
/// The distillation sum is multiplied by `scale`.
#[derive(Debug, Clone, Copy)]
pub struct DistillBatch<'a> {
    pub entities: &'a [(EntityId, f64)],
    pub teachers: &'a TeacherStore,
    pub logits: &'a [f64],
    pub scale: f64,
}

/// `L_final = L_ckge + L_distill` for one mini-batch. When `grads` is given,
/// the analytic gradient is accumulated into it.
pub fn batch_objective(
    table: &EmbeddingTable,
    norm: ScoreNorm,
    margin: f64,
    pairs: &[(Triple, Triple)],
    distill: Option<DistillBatch<'_>>,
    mut grads: Option<&mut Gradients>,
) -> LossParts {
    let mut parts = LossParts::default();
    let dim = table.dim();

    if !pairs.is_empty() {
        let scale = 1.0 / pairs.len() as f64;
        let mut g_pos = vec![0.0; dim];
        let mut g_neg = vec![0.0; dim];
        for (pos, neg) in pairs {
            let sp = table.score(pos, norm);
            let sn = table.score(neg, norm);
            let violation = sp - sn + margin;
            if violation <= 0.0 {
                continue;
            }
            parts.ckge += violation * scale;
            if let Some(g) = grads.as_deref_mut() {
                score_residual_grad(
                    table.entity(pos.head),
                    table.relation(pos.relation),
                    table.entity(pos.tail),
                    norm,
                    &mut g_pos,
                );
                score_residual_grad(
                    table.entity(neg.head),
                    table.relation(neg.relation),
                    table.entity(neg.tail),
                    norm,
                    &mut g_neg,
                );
                add_scaled(g.entities.row_mut(pos.head as usize), &g_pos, scale);
                add_scaled(g.relations.row_mut(pos.relation as usize), &g_pos, scale);
                add_scaled(g.entities.row_mut(pos.tail as usize), &g_pos, -scale);
                add_scaled(g.entities.row_mut(neg.head as usize), &g_neg, -scale);
                add_scaled(g.relations.row_mut(neg.relation as usize), &g_neg, -scale);
                add_scaled(g.entities.row_mut(neg.tail as usize), &g_neg, scale);
            }
        }
    }

    if let Some(d) = distill {
        for &(e, base) in d.entities {
            if base == 0.0 {
                continue;
            }
            let Some(teacher) = d.teachers.get(e) else {
                continue;
            };
            let current = table.entity(e);
            let gate = sigmoid(d.logits.get(e as usize).copied().unwrap_or(0.0));
            let huber = distill_entity_loss(current, &teacher.vector);
            let base = base * d.scale;
            parts.distill += base * gate * huber;
            if let Some(g) = grads.as_deref_mut() {
                add_distill_entity_grad(
                    current,
                    &teacher.vector,
                    base * gate,
                    g.entities.row_mut(e as usize),
                );
                g.logits.row_mut(e as usize)[0] += base * huber * gate * (1.0 - gate);
            }
        }
    }
    parts
}

fn add_scaled(out: &mut [f64], g: &[f64], scale: f64) {
    for (o, x) in out.iter_mut().zip(g) {
        *o += scale * x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_examples() {
        assert_eq!(margin_loss(&[(0.2, 1.0)], 0.5), 0.0);
        assert!((margin_loss(&[(1.0, 0.8)], 0.5) - 0.7).abs() < 1e-15);
        assert_eq!(margin_loss(&[(0.4, 0.4)], 0.0), 0.0);
        assert!((margin_loss(&[(1.0, 0.8), (0.2, 1.0)], 0.5) - 0.35).abs() < 1e-15);
    }
}
