//! Centrality measures over the emerging subgraph of a time step.
//!
//! The graph is undirected and keeps parallel edges, so the number of shortest
//! paths between two entities counts edge sequences. Self-loops never lie on a
//! shortest path and are ignored apart from contributing their entity to `N`.
//! Betweenness sums over unordered entity pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId, Triple};

/// Sources processed per parallel work item. The partial sums are reduced in
/// chunk order, so results do not depend on the thread count.
const SOURCE_CHUNK: usize = 32;

/// Undirected multigraph over the entities of a triple list, with dense local indices.
#[derive(Debug, Clone)]
pub struct EmergingGraph {
    entities: Vec<EntityId>,
    relations: Vec<RelationId>,
    /// `(neighbour, local relation index)` per edge end; self-loops excluded.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl EmergingGraph {
    pub fn new(triples: &[Triple]) -> Self {
        let mut sorted = triples.to_vec();
        sorted.sort_unstable();
        sorted.dedup();

        let entities: Vec<EntityId> = sorted
            .iter()
            .flat_map(|t| [t.head, t.tail])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let relations: Vec<RelationId> = sorted
            .iter()
            .map(|t| t.relation)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let entity_index: HashMap<EntityId, usize> =
            entities.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let relation_index: HashMap<RelationId, usize> =
            relations.iter().enumerate().map(|(i, &r)| (r, i)).collect();

        let mut adjacency = vec![Vec::new(); entities.len()];
        for t in &sorted {
            if t.head == t.tail {
                continue;
            }
            let (h, tl, r) = (
                entity_index[&t.head],
                entity_index[&t.tail],
                relation_index[&t.relation],
            );
            adjacency[h].push((tl, r));
            adjacency[tl].push((h, r));
        }
        EmergingGraph {
            entities,
            relations,
            adjacency,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn relations(&self) -> &[RelationId] {
        &self.relations
    }

    /// `f_nc(e) = |distinct neighbours| / (N - 1)`, or 0 for every entity when `N = 1`.
    pub fn node_centrality(&self) -> BTreeMap<EntityId, f64> {
        let n = self.entities.len();
        self.adjacency
            .iter()
            .zip(&self.entities)
            .map(|(adj, &e)| {
                if n <= 1 {
                    return (e, 0.0);
                }
                let distinct: BTreeSet<usize> = adj.iter().map(|&(v, _)| v).collect();
                (e, distinct.len() as f64 / (n - 1) as f64)
            })
            .collect()
    }

    /// Entity and relation betweenness from the given source entities
    /// (local indices), as ordered-pair sums.
    fn accumulate(&self, sources: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let n = self.entities.len();
        let m = self.relations.len();
        let partials: Vec<(Vec<f64>, Vec<f64>)> = sources
            .par_chunks(SOURCE_CHUNK)
            .map(|chunk| {
                let mut scratch = SourceScratch::new(n, m);
                let mut entity = vec![0.0; n];
                let mut relation = vec![0.0; m];
                for &s in chunk {
                    scratch.run(self, s, &mut entity, &mut relation);
                }
                (entity, relation)
            })
            .collect();

        let mut entity = vec![0.0; n];
        let mut relation = vec![0.0; m];
        for (pe, pr) in partials {
            entity.iter_mut().zip(pe).for_each(|(a, b)| *a += b);
            relation.iter_mut().zip(pr).for_each(|(a, b)| *a += b);
        }
        (entity, relation)
    }

    /// Exact entity and relation betweenness over unordered pairs.
    pub fn betweenness(&self) -> (BTreeMap<EntityId, f64>, BTreeMap<RelationId, f64>) {
        let sources: Vec<usize> = (0..self.entities.len()).collect();
        let (entity, relation) = self.accumulate(&sources);
        self.finish(entity, relation, 0.5)
    }

    /// Pivot-sampled betweenness: `pivots` sources drawn without replacement and
    /// the sums rescaled by `N / pivots`.
    pub fn sampled_betweenness(
        &self,
        pivots: usize,
        seed: u64,
    ) -> (BTreeMap<EntityId, f64>, BTreeMap<RelationId, f64>) {
        let n = self.entities.len();
        if pivots == 0 || pivots >= n {
            return self.betweenness();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sources = sample(&mut rng, n, pivots).into_vec();
        sources.sort_unstable();
        let (entity, relation) = self.accumulate(&sources);
        self.finish(entity, relation, 0.5 * n as f64 / pivots as f64)
    }

    fn finish(
        &self,
        entity: Vec<f64>,
        relation: Vec<f64>,
        scale: f64,
    ) -> (BTreeMap<EntityId, f64>, BTreeMap<RelationId, f64>) {
        (
            self.entities
                .iter()
                .zip(entity)
                .map(|(&e, v)| (e, v * scale))
                .collect(),
            self.relations
                .iter()
                .zip(relation)
                .map(|(&r, v)| (r, v * scale))
                .collect(),
        )
    }
}

/// Per-source buffers for the Brandes sweep.
struct SourceScratch {
    dist: Vec<usize>,
    sigma: Vec<f64>,
    dependency: Vec<f64>,
    /// Shortest-path predecessor edges `(u, relation)` of each node.
    preds: Vec<Vec<(usize, usize)>>,
    /// Sparse per-node counts of shortest paths from the source using each relation.
    via_relation: Vec<Vec<(usize, f64)>>,
    acc: Vec<f64>,
    touched: Vec<usize>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl SourceScratch {
    fn new(n: usize, m: usize) -> Self {
        SourceScratch {
            dist: vec![usize::MAX; n],
            sigma: vec![0.0; n],
            dependency: vec![0.0; n],
            preds: vec![Vec::new(); n],
            via_relation: vec![Vec::new(); n],
            acc: vec![0.0; m],
            touched: Vec::new(),
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    fn run(&mut self, g: &EmergingGraph, s: usize, entity: &mut [f64], relation: &mut [f64]) {
        for &v in &self.order {
            self.dist[v] = usize::MAX;
            self.sigma[v] = 0.0;
            self.dependency[v] = 0.0;
            self.preds[v].clear();
            self.via_relation[v].clear();
        }
        self.order.clear();

        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for &(w, r) in &g.adjacency[v] {
                if self.dist[w] == usize::MAX {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push((v, r));
                }
            }
        }

        // Paths through each relation, in BFS order so predecessors are final.
        for i in 1..self.order.len() {
            let v = self.order[i];
            for k in 0..self.preds[v].len() {
                let (u, label) = self.preds[v][k];
                for &(r, c) in &self.via_relation[u] {
                    if r != label {
                        if self.acc[r] == 0.0 {
                            self.touched.push(r);
                        }
                        self.acc[r] += c;
                    }
                }
                if self.acc[label] == 0.0 {
                    self.touched.push(label);
                }
                self.acc[label] += self.sigma[u];
            }
            self.touched.sort_unstable();
            self.touched.dedup();
            let sigma_v = self.sigma[v];
            let mut counts = Vec::with_capacity(self.touched.len());
            for &r in &self.touched {
                counts.push((r, self.acc[r]));
                relation[r] += self.acc[r] / sigma_v;
                self.acc[r] = 0.0;
            }
            self.touched.clear();
            self.via_relation[v] = counts;
        }

        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.dependency[w]) / self.sigma[w];
            for &(u, _) in &self.preds[w] {
                self.dependency[u] += self.sigma[u] * coeff;
            }
            if w != s {
                entity[w] += self.dependency[w];
            }
        }
    }
}

/// Exact or pivot-sampled betweenness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetweennessConfig {
    #[serde(default)]
    pub scale: BetweennessScale,
    /// Switch to pivot sampling when the emerging graph has more entities than this.
    pub sample_above: Option<usize>,
    pub pivots: usize,
    pub seed: u64,
}

impl Default for BetweennessConfig {
    fn default() -> Self {
        BetweennessConfig {
            scale: BetweennessScale::Raw,
            sample_above: None,
            pivots: 256,
            seed: 0,
        }
    }
}

/// Whether betweenness enters triple importance and distillation weights as
/// a raw pair sum or divided by the pair count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetweennessScale {
    #[default]
    Raw,
    Normalized,
}

impl std::str::FromStr for BetweennessScale {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(BetweennessScale::Raw),
            "normalized" => Ok(BetweennessScale::Normalized),
            other => Err(crate::Error::Config(format!("unknown betweenness scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    pub node_centrality: BTreeMap<EntityId, f64>,
    pub entity_betweenness: BTreeMap<EntityId, f64>,
    pub relation_betweenness: BTreeMap<RelationId, f64>,
}

impl CentralityScores {
    pub fn compute(triples: &[Triple]) -> Self {
        Self::compute_with(triples, &BetweennessConfig::default())
    }

    pub fn compute_with(triples: &[Triple], config: &BetweennessConfig) -> Self {
        let graph = EmergingGraph::new(triples);
        let (entity_betweenness, relation_betweenness) = match config.sample_above {
            Some(limit) if graph.num_entities() > limit => {
                graph.sampled_betweenness(config.pivots, config.seed)
            }
            _ => graph.betweenness(),
        };
        let scores = CentralityScores {
            node_centrality: graph.node_centrality(),
            entity_betweenness,
            relation_betweenness,
        };
        match config.scale {
            BetweennessScale::Raw => scores,
            BetweennessScale::Normalized => scores.normalized(),
        }
    }

    /// Copy with betweenness divided by the number of unordered pairs it can
    /// range over: `(N-1)(N-2)/2` for entities (pairs not containing the
    /// entity) and `N(N-1)/2` for relations, `N` being the emerging graph's
    /// entity count. Values then lie in `[0, 1]` like node centrality.
    pub fn normalized(&self) -> Self {
        let n = self.node_centrality.len() as f64;
        let entity_pairs = (n - 1.0) * (n - 2.0) / 2.0;
        let relation_pairs = n * (n - 1.0) / 2.0;
        let scale = |v: f64, pairs: f64| if pairs > 0.0 { v / pairs } else { 0.0 };
        CentralityScores {
            node_centrality: self.node_centrality.clone(),
            entity_betweenness: self
                .entity_betweenness
                .iter()
                .map(|(&e, &v)| (e, scale(v, entity_pairs)))
                .collect(),
            relation_betweenness: self
                .relation_betweenness
                .iter()
                .map(|(&r, &v)| (r, scale(v, relation_pairs)))
                .collect(),
        }
    }

    /// `f_bc(e) + f_nc(e)`, zero for entities outside the emerging graph.
    pub fn entity_importance(&self, entity: EntityId) -> f64 {
        self.entity_betweenness.get(&entity).copied().unwrap_or(0.0)
            + self.node_centrality.get(&entity).copied().unwrap_or(0.0)
    }
}

pub fn node_centrality(triples: &[Triple]) -> BTreeMap<EntityId, f64> {
    EmergingGraph::new(triples).node_centrality()
}

pub fn entity_betweenness(triples: &[Triple]) -> BTreeMap<EntityId, f64> {
    EmergingGraph::new(triples).betweenness().0
}

pub fn relation_betweenness(triples: &[Triple]) -> BTreeMap<RelationId, f64> {
    EmergingGraph::new(triples).betweenness().1
}

/// `IT(h, r, t) = max(f_nc(h), f_nc(t)) + f_bc(r)`.
pub fn triple_importance(triple: &Triple, scores: &CentralityScores) -> Result<f64> {
    let nc = |e: EntityId| {
        scores
            .node_centrality
            .get(&e)
            .copied()
            .ok_or_else(|| Error::MissingScore(format!("node centrality of entity {e}")))
    };
    let bc = scores
        .relation_betweenness
        .get(&triple.relation)
        .copied()
        .ok_or_else(|| {
            Error::MissingScore(format!("betweenness of relation {}", triple.relation))
        })?;
    Ok(nc(triple.head)?.max(nc(triple.tail)?) + bc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(h: u32, r: u32, tl: u32) -> Triple {
        Triple::new(h, r, tl)
    }

    #[test]
    fn triangle_is_fully_central() {
        let nc = node_centrality(&[t(0, 0, 1), t(0, 0, 2), t(1, 0, 2)]);
        assert!(nc.values().all(|&v| v == 1.0));
        let eb = entity_betweenness(&[t(0, 0, 1), t(0, 0, 2), t(1, 0, 2)]);
        assert!(eb.values().all(|&v| v == 0.0));
    }

    #[test]
    fn path_node_centrality() {
        let nc = node_centrality(&[t(0, 0, 1), t(1, 0, 2)]);
        assert_eq!(nc[&1], 1.0);
        assert_eq!(nc[&0], 0.5);
        assert_eq!(nc[&2], 0.5);
    }

    #[test]
    fn self_loop_only_is_guarded() {
        let nc = node_centrality(&[t(0, 0, 0)]);
        assert_eq!(nc[&0], 0.0);
    }

    #[test]
    fn path_relation_betweenness() {
        let rb = relation_betweenness(&[t(0, 1, 1), t(1, 2, 2)]);
        assert_eq!(rb[&1], 2.0);
        assert_eq!(rb[&2], 2.0);
    }

    #[test]
    fn single_and_disconnected_relation_betweenness() {
        assert_eq!(relation_betweenness(&[t(0, 0, 1)])[&0], 1.0);
        let rb = relation_betweenness(&[t(0, 1, 1), t(2, 2, 3)]);
        assert_eq!(rb[&1], 1.0);
        assert_eq!(rb[&2], 1.0);
    }

    #[test]
    fn path_and_star_entity_betweenness() {
        let eb = entity_betweenness(&[t(0, 0, 1), t(1, 0, 2)]);
        assert_eq!((eb[&0], eb[&1], eb[&2]), (0.0, 1.0, 0.0));
        let star = entity_betweenness(&[t(9, 0, 1), t(9, 0, 2), t(3, 0, 9)]);
        assert_eq!(star[&9], 3.0);
    }

    #[test]
    fn repeated_relation_on_a_path_counts_once() {
        // a -r- b -r- c: pairs (a,b), (b,c), (a,c) all use r exactly once as membership.
        let rb = relation_betweenness(&[t(0, 5, 1), t(1, 5, 2)]);
        assert_eq!(rb[&5], 3.0);
    }

    #[test]
    fn parallel_edges_split_path_counts() {
        // a =r1,r2= b -r3- c : half of the a..c shortest paths use r1.
        let rb = relation_betweenness(&[t(0, 1, 1), t(0, 2, 1), t(1, 3, 2)]);
        assert_eq!(rb[&1], 1.0);
        assert_eq!(rb[&2], 1.0);
        assert_eq!(rb[&3], 2.0);
    }

    #[test]
    fn importance_formula() {
        let scores = CentralityScores {
            node_centrality: [(0, 1.0), (1, 0.5), (2, 0.4), (3, 0.4)].into(),
            entity_betweenness: BTreeMap::new(),
            relation_betweenness: [(0, 2.0), (1, 1.0), (2, 0.0)].into(),
        };
        assert_eq!(triple_importance(&t(0, 0, 1), &scores).unwrap(), 3.0);
        assert!((triple_importance(&t(2, 1, 3), &scores).unwrap() - 1.4).abs() < 1e-15);
        assert!(matches!(
            triple_importance(&t(0, 9, 1), &scores),
            Err(Error::MissingScore(_))
        ));
    }

    #[test]
    fn zero_scores_give_zero_importance() {
        let scores = CentralityScores {
            node_centrality: [(0, 0.0), (1, 0.0)].into(),
            entity_betweenness: BTreeMap::new(),
            relation_betweenness: [(0, 0.0)].into(),
        };
        assert_eq!(triple_importance(&t(0, 0, 1), &scores).unwrap(), 0.0);
    }

    #[test]
    fn sampling_with_all_pivots_is_exact() {
        let triples = [t(0, 0, 1), t(1, 1, 2), t(2, 0, 3), t(3, 1, 0), t(1, 2, 3)];
        let g = EmergingGraph::new(&triples);
        assert_eq!(g.sampled_betweenness(4, 1), g.betweenness());
    }
}
