use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::centrality::{triple_importance, CentralityScores};
use crate::error::{Error, Result};
use crate::kg::{EntityId, Triple};

/// One layer of the breadth-first partition, before intra-layer sorting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLayer {
    pub triples: Vec<Triple>,
    /// True for the final layer of triples not reachable from the old graph.
    pub remainder: bool,
}

/// Breadth-first expansion from the old entities.
///
/// Layer `k` holds every unassigned triple touching an entity seen so far; the
/// entities it introduces are seen from layer `k + 1` on. Triples never reached
/// form one final remainder layer.
pub fn inter_hierarchical_layering(
    new_triples: &[Triple],
    old_entities: &BTreeSet<EntityId>,
) -> Vec<RawLayer> {
    let mut incident: HashMap<EntityId, Vec<usize>> = HashMap::new();
    for (i, t) in new_triples.iter().enumerate() {
        incident.entry(t.head).or_default().push(i);
        if t.tail != t.head {
            incident.entry(t.tail).or_default().push(i);
        }
    }

    let mut assigned = vec![false; new_triples.len()];
    let mut seen: HashSet<EntityId> = old_entities.iter().copied().collect();
    let mut frontier: Vec<EntityId> = old_entities
        .iter()
        .copied()
        .filter(|e| incident.contains_key(e))
        .collect();
    let mut layers = Vec::new();

    loop {
        let mut layer = Vec::new();
        for e in &frontier {
            for &i in incident.get(e).into_iter().flatten() {
                if !assigned[i] {
                    assigned[i] = true;
                    layer.push(i);
                }
            }
        }
        if layer.is_empty() {
            break;
        }
        layer.sort_unstable();
        frontier.clear();
        for &i in &layer {
            let t = new_triples[i];
            for e in [t.head, t.tail] {
                if seen.insert(e) {
                    frontier.push(e);
                }
            }
        }
        layers.push(RawLayer {
            triples: layer.into_iter().map(|i| new_triples[i]).collect(),
            remainder: false,
        });
    }

    let rest: Vec<Triple> = new_triples
        .iter()
        .zip(&assigned)
        .filter(|(_, &a)| !a)
        .map(|(t, _)| *t)
        .collect();
    if !rest.is_empty() {
        layers.push(RawLayer {
            triples: rest,
            remainder: true,
        });
    }
    layers
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Index of the breadth-first layer this chunk was split from.
    pub source_layer: usize,
    pub remainder: bool,
    pub triples: Vec<Triple>,
    /// Importance of each triple, parallel to `triples`.
    pub importance: Vec<f64>,
}

impl Layer {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Distinct entities of the layer, ascending.
    pub fn entities(&self) -> Vec<EntityId> {
        self.triples
            .iter()
            .flat_map(|t| [t.head, t.tail])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Ordered, size-capped layers covering the new training triples of one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub max_layer_size: usize,
    pub layers: Vec<Layer>,
}

/// Sorts each breadth-first layer by descending importance (ties by ascending
/// `(head, relation, tail)`) and cuts it into consecutive chunks of at most
/// `max_layer_size` triples.
pub fn build_layer_plan(
    new_triples: &[Triple],
    old_entities: &BTreeSet<EntityId>,
    max_layer_size: usize,
    scores: &CentralityScores,
) -> Result<LayerPlan> {
    if max_layer_size == 0 {
        return Err(Error::Config("max layer size must be at least 1".into()));
    }
    let mut layers = Vec::new();
    for (source_layer, raw) in inter_hierarchical_layering(new_triples, old_entities)
        .into_iter()
        .enumerate()
    {
        let mut scored = raw
            .triples
            .into_iter()
            .map(|t| triple_importance(&t, scores).map(|it| (t, it)))
            .collect::<Result<Vec<_>>>()?;
        scored.sort_by(|(ta, a), (tb, b)| b.total_cmp(a).then_with(|| ta.cmp(tb)));
        for chunk in scored.chunks(max_layer_size) {
            layers.push(Layer {
                source_layer,
                remainder: raw.remainder,
                triples: chunk.iter().map(|(t, _)| *t).collect(),
                importance: chunk.iter().map(|(_, it)| *it).collect(),
            });
        }
    }
    Ok(LayerPlan {
        max_layer_size,
        layers,
    })
}

impl LayerPlan {
    /// All triples as one randomly ordered layer, as used without hierarchical ordering.
    pub fn shuffled<R: Rng + ?Sized>(
        new_triples: &[Triple],
        scores: &CentralityScores,
        rng: &mut R,
    ) -> Result<Self> {
        let mut triples = new_triples.to_vec();
        triples.shuffle(rng);
        let importance = triples
            .iter()
            .map(|t| triple_importance(t, scores))
            .collect::<Result<Vec<_>>>()?;
        Ok(LayerPlan {
            max_layer_size: triples.len().max(1),
            layers: vec![Layer {
                source_layer: 0,
                remainder: false,
                triples,
                importance,
            }],
        })
    }

    pub fn num_triples(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    /// Fails unless the layers are disjoint and cover exactly `expected`.
    pub fn check_partition(&self, expected: &[Triple]) -> Result<()> {
        let mut seen = HashSet::with_capacity(expected.len());
        for t in self.layers.iter().flat_map(|l| &l.triples) {
            if !seen.insert(*t) {
                return Err(Error::InvalidPlan(format!("triple {t} appears twice")));
            }
        }
        let wanted: HashSet<Triple> = expected.iter().copied().collect();
        if wanted.len() != expected.len() {
            return Err(Error::InvalidPlan("expected triples contain duplicates".into()));
        }
        if seen != wanted {
            let missing = wanted.difference(&seen).count();
            let extra = seen.difference(&wanted).count();
            return Err(Error::InvalidPlan(format!(
                "{missing} triple(s) missing, {extra} unexpected"
            )));
        }
        Ok(())
    }

    /// Every non-remainder triple must touch an old entity or one introduced by
    /// an earlier breadth-first layer.
    pub fn check_reachability(&self, old_entities: &BTreeSet<EntityId>) -> Result<()> {
        let mut seen: HashSet<EntityId> = old_entities.iter().copied().collect();
        let mut pending: Vec<EntityId> = Vec::new();
        let mut current_source = usize::MAX;
        for layer in &self.layers {
            if layer.source_layer != current_source {
                seen.extend(pending.drain(..));
                current_source = layer.source_layer;
            }
            for t in &layer.triples {
                if !layer.remainder && !seen.contains(&t.head) && !seen.contains(&t.tail) {
                    return Err(Error::InvalidPlan(format!(
                        "triple {t} in layer {} is not reachable from earlier layers",
                        layer.source_layer
                    )));
                }
                pending.extend([t.head, t.tail]);
            }
        }
        Ok(())
    }

    pub fn to_export(&self) -> PlanExport {
        PlanExport {
            max_layer_size: self.max_layer_size,
            layers: self
                .layers
                .iter()
                .map(|l| LayerExport {
                    source_layer: l.source_layer,
                    remainder: l.remainder,
                    triples: l.triples.iter().map(|t| [t.head, t.relation, t.tail]).collect(),
                    importance: l.importance.clone(),
                })
                .collect(),
        }
    }
}

/// JSON form of a plan: triples as `[head, relation, tail]` id arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanExport {
    pub max_layer_size: usize,
    pub layers: Vec<LayerExport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerExport {
    pub source_layer: usize,
    pub remainder: bool,
    pub triples: Vec<[u32; 3]>,
    pub importance: Vec<f64>,
}
