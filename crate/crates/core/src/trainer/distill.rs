//! Layer-to-layer distillation: each entity is pulled towards the vector it had
//! at the end of the nearest previous layer, weighted by its structural
//! importance and a learned per-entity gate.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::model::EmbeddingTable;
use crate::kg::EntityId;
use crate::ordering::CentralityScores;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Teacher {
    pub vector: Vec<f64>,
    /// Layer after which the vector was captured; 0 is the previous time step.
    pub layer: usize,
}

/// Frozen teacher vectors, replaced only at layer boundaries.
#[derive(Debug, Clone, Default)]
pub struct TeacherStore {
    teachers: HashMap<EntityId, Teacher>,
}

impl TeacherStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Captures the current vectors of `entities` as teachers from `layer`.
    pub fn capture<'a>(
        &mut self,
        table: &EmbeddingTable,
        entities: impl IntoIterator<Item = &'a EntityId>,
        layer: usize,
    ) {
        for &e in entities {
            self.teachers.insert(
                e,
                Teacher {
                    vector: table.entity(e).to_vec(),
                    layer,
                },
            );
        }
    }

    pub fn get(&self, entity: EntityId) -> Option<&Teacher> {
        self.teachers.get(&entity)
    }

    pub fn contains(&self, entity: EntityId) -> bool {
        self.teachers.contains_key(&entity)
    }

    pub fn len(&self) -> usize {
        self.teachers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teachers.is_empty()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-coordinate Huber distance between an entity vector and its teacher.
pub fn distill_entity_loss(current: &[f64], teacher: &[f64]) -> f64 {
    current
        .iter()
        .zip(teacher)
        .map(|(e, t)| {
            let d = (t - e).abs();
            if d <= 1.0 {
                0.5 * d * d
            } else {
                d - 0.5
            }
        })
        .sum()
}

/// Gradient of [`distill_entity_loss`] with respect to `current`, scaled by
/// `scale` and added into `out`.
pub(crate) fn add_distill_entity_grad(current: &[f64], teacher: &[f64], scale: f64, out: &mut [f64]) {
    for ((o, e), t) in out.iter_mut().zip(current).zip(teacher) {
        *o += scale * (e - t).clamp(-1.0, 1.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistillWeight {
    pub entity: EntityId,
    /// 1 when the entity has a teacher, else 0.
    pub gate: f64,
    /// `gate * (f_bc(e) + f_nc(e))`.
    pub base: f64,
    /// `base * sigmoid(logit)`.
    pub effective: f64,
}

pub fn compute_distill_weights(
    entities: &[EntityId],
    scores: &CentralityScores,
    teachers: &TeacherStore,
    logits: &[f64],
) -> Vec<DistillWeight> {
    entities
        .iter()
        .map(|&e| {
            let gate = if teachers.contains(e) { 1.0 } else { 0.0 };
            let base = gate * scores.entity_importance(e);
            let logit = logits.get(e as usize).copied().unwrap_or(0.0);
            DistillWeight {
                entity: e,
                gate,
                base,
                effective: base * sigmoid(logit),
            }
        })
        .collect()
}

/// `sum_k lambda'_k * L_distill^k` over the given entities.
pub fn layer_distill_loss(
    table: &EmbeddingTable,
    teachers: &TeacherStore,
    weights: &[DistillWeight],
) -> f64 {
    weights
        .iter()
        .filter(|w| w.effective != 0.0)
        .filter_map(|w| {
            teachers
                .get(w.entity)
                .map(|t| w.effective * distill_entity_loss(table.entity(w.entity), &t.vector))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn huber_branches() {
        assert_eq!(distill_entity_loss(&[0.0], &[0.5]), 0.125);
        assert_eq!(distill_entity_loss(&[0.0], &[2.0]), 1.5);
        assert_eq!(distill_entity_loss(&[1.0], &[0.0]), 0.5);
        // both branches agree at the knee
        let quadratic = 0.5 * 1.0f64 * 1.0;
        let linear = 1.0 - 0.5;
        assert_eq!(quadratic, linear);
    }

    fn scores(bc: f64, nc: f64) -> CentralityScores {
        CentralityScores {
            node_centrality: BTreeMap::from([(0, nc)]),
            entity_betweenness: BTreeMap::from([(0, bc)]),
            relation_betweenness: BTreeMap::new(),
        }
    }

    fn store_with_entity0(vector: Vec<f64>) -> (EmbeddingTable, TeacherStore) {
        let mut table = EmbeddingTable::new(vector.len());
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        table.ensure_entity(0, &mut rng);
        table.entity_mut(0).copy_from_slice(&vector);
        let mut store = TeacherStore::new();
        store.capture(&table, &[0], 0);
        (table, store)
    }

    #[test]
    fn weights_with_teacher() {
        let (_, store) = store_with_entity0(vec![0.0]);
        let w = compute_distill_weights(&[0], &scores(0.2, 0.3), &store, &[0.0]);
        assert!((w[0].effective - 0.25).abs() < 1e-15);
    }

    #[test]
    fn weights_without_teacher_or_centrality_are_zero() {
        let w = compute_distill_weights(&[0], &scores(5.0, 1.0), &TeacherStore::new(), &[3.0]);
        assert_eq!(w[0].effective, 0.0);
        let (_, store) = store_with_entity0(vec![0.0]);
        let w = compute_distill_weights(&[0], &scores(0.0, 0.0), &store, &[3.0]);
        assert_eq!(w[0].effective, 0.0);
    }

    #[test]
    fn layer_loss_products() {
        let (mut table, store) = store_with_entity0(vec![0.0]);
        let weight = |effective| DistillWeight {
            entity: 0,
            gate: 1.0,
            base: 1.0,
            effective,
        };
        assert_eq!(layer_distill_loss(&table, &store, &[weight(0.25)]), 0.0);
        table.entity_mut(0)[0] = 0.5;
        assert_eq!(layer_distill_loss(&table, &store, &[weight(0.25)]), 0.03125);
        assert_eq!(layer_distill_loss(&table, &store, &[weight(0.0)]), 0.0);
    }
}
