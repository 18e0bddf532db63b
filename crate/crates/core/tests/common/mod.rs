//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use incde::datagen::{build_growth_dataset, generate_base_kg, GrowthPattern, GrowthSchedule, SyntheticKgConfig};
use incde::kg::{EntityId, GrowingDataset, RelationId, Triple};
use incde::ordering::LayerPlan;
use incde::trainer::{EmbeddingTable, ScoreNorm};
use rand::{Rng, RngExt};

/// Random triple list over `entities` entity ids and `relations` relation ids,
/// possibly with duplicates and self-loops.
pub fn random_triples<R: Rng>(rng: &mut R, entities: u32, relations: u32, edges: usize) -> Vec<Triple> {
    (0..edges)
        .map(|_| {
            Triple::new(
                rng.random_range(0..entities),
                rng.random_range(0..relations),
                rng.random_range(0..entities),
            )
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct OracleCentrality {
    pub node: BTreeMap<EntityId, f64>,
    pub entity: BTreeMap<EntityId, f64>,
    pub relation: BTreeMap<RelationId, f64>,
}

/// Centralities by enumerating every simple path between every unordered
/// entity pair and keeping the shortest ones. Parallel edges give distinct
/// paths; self-loops are ignored.
pub fn oracle_centrality(triples: &[Triple]) -> OracleCentrality {
    let unique: BTreeSet<Triple> = triples.iter().copied().collect();
    let entities: BTreeSet<EntityId> = unique.iter().flat_map(|t| [t.head, t.tail]).collect();
    let relations: BTreeSet<RelationId> = unique.iter().map(|t| t.relation).collect();
    let edges: Vec<(EntityId, EntityId, RelationId)> = unique
        .iter()
        .filter(|t| t.head != t.tail)
        .map(|t| (t.head, t.tail, t.relation))
        .collect();

    let mut out = OracleCentrality::default();
    let n = entities.len();
    for &e in &entities {
        let neighbours: BTreeSet<EntityId> = edges
            .iter()
            .filter_map(|&(a, b, _)| if a == e { Some(b) } else if b == e { Some(a) } else { None })
            .collect();
        let v = if n <= 1 { 0.0 } else { neighbours.len() as f64 / (n - 1) as f64 };
        out.node.insert(e, v);
        out.entity.insert(e, 0.0);
    }
    for &r in &relations {
        out.relation.insert(r, 0.0);
    }

    let list: Vec<EntityId> = entities.iter().copied().collect();
    for (i, &s) in list.iter().enumerate() {
        for &t in &list[i + 1..] {
            // Iterative deepening keeps the search to paths no longer than the shortest.
            let mut shortest: Vec<(Vec<EntityId>, Vec<RelationId>)> = Vec::new();
            for limit in 1..n {
                let mut best = limit;
                let mut nodes = vec![s];
                let mut labels = Vec::new();
                walk(&edges, t, &mut nodes, &mut labels, &mut best, &mut shortest);
                if !shortest.is_empty() {
                    break;
                }
            }
            if shortest.is_empty() {
                continue;
            }
            let sigma = shortest.len() as u64;
            for &e in &list {
                let through = shortest
                    .iter()
                    .filter(|(p, _)| p[1..p.len() - 1].contains(&e))
                    .count() as u64;
                *out.entity.get_mut(&e).unwrap() += through as f64 / sigma as f64;
            }
            for &r in &relations {
                let through = shortest.iter().filter(|(_, l)| l.contains(&r)).count() as u64;
                *out.relation.get_mut(&r).unwrap() += through as f64 / sigma as f64;
            }
        }
    }
    out
}

fn walk(
    edges: &[(EntityId, EntityId, RelationId)],
    target: EntityId,
    nodes: &mut Vec<EntityId>,
    labels: &mut Vec<RelationId>,
    best: &mut usize,
    found: &mut Vec<(Vec<EntityId>, Vec<RelationId>)>,
) {
    let here = *nodes.last().unwrap();
    if here == target {
        if labels.len() < *best {
            *best = labels.len();
            found.clear();
        }
        found.push((nodes.clone(), labels.clone()));
        return;
    }
    if labels.len() >= *best {
        return;
    }
    for &(a, b, r) in edges {
        let next = if a == here {
            b
        } else if b == here {
            a
        } else {
            continue;
        };
        if nodes.contains(&next) {
            continue;
        }
        nodes.push(next);
        labels.push(r);
        walk(edges, target, nodes, labels, best, found);
        nodes.pop();
        labels.pop();
    }
}

pub fn oracle_score(table: &EmbeddingTable, t: &Triple, norm: ScoreNorm) -> f64 {
    let (h, r, tl) = (table.entity(t.head), table.relation(t.relation), table.entity(t.tail));
    let residual = (0..h.len()).map(|j| h[j] + r[j] - tl[j]);
    match norm {
        ScoreNorm::L1 => residual.map(f64::abs).sum(),
        ScoreNorm::L2 => residual.map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// Rank of the gold entity after scoring every allowed substitution and
/// sorting ascending, with the gold placed after any candidate of equal score.
pub fn oracle_rank(
    table: &EmbeddingTable,
    norm: ScoreNorm,
    triple: Triple,
    replace_head: bool,
    candidates: &[EntityId],
    filter: Option<&HashSet<Triple>>,
) -> usize {
    let substitute = |c: EntityId| {
        if replace_head {
            Triple::new(c, triple.relation, triple.tail)
        } else {
            Triple::new(triple.head, triple.relation, c)
        }
    };
    let gold = if replace_head { triple.head } else { triple.tail };
    let mut scored: Vec<(f64, bool)> = candidates
        .iter()
        .filter(|&&c| c == gold || !filter.is_some_and(|f| f.contains(&substitute(c))))
        .map(|&c| (oracle_score(table, &substitute(c), norm), c == gold))
        .collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    scored.iter().position(|&(_, g)| g).unwrap() + 1
}

/// A small generated growing dataset with an Equal schedule.
pub fn toy_dataset(seed: u64, entities: usize, relations: usize, triples: usize, steps: usize) -> GrowingDataset {
    let base = generate_base_kg(&SyntheticKgConfig {
        num_entities: entities,
        num_relations: relations,
        num_triples: triples,
        seed,
        ..SyntheticKgConfig::default()
    })
    .unwrap();
    build_growth_dataset(&base, &GrowthSchedule::new(GrowthPattern::Equal, steps), seed).unwrap()
}

/// Largest relative error between analytic and central-difference gradients,
/// per objective. `logits` covers the gate logits under the full objective.
#[derive(Debug, Clone, Copy, Default)]
pub struct GradientErrors {
    pub ckge: f64,
    pub distill: f64,
    pub total: f64,
    pub logits: f64,
}

pub const FD_STEP: f64 = 1e-5;
/// Probe points closer than this to a hinge, L1 or Huber kink are redrawn.
pub const KINK_CLEARANCE: f64 = 1e-3;

/// Denominator floor for the relative error. Components that cancel to exactly
/// zero leave a central difference of a few ulps of the objective over 2h
/// (about 2e-10 here), so near zero the check is absolute at tolerance * floor.
pub const REL_ERR_FLOOR: f64 = 1e-3;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_ERR_FLOOR)
}

struct GradCase {
    table: EmbeddingTable,
    pairs: Vec<(Triple, Triple)>,
    weights: Vec<(EntityId, f64)>,
    teachers: incde::trainer::TeacherStore,
    logits: Vec<f64>,
    scale: f64,
    margin: f64,
}

fn grad_case<R: Rng>(rng: &mut R, norm: ScoreNorm, dim: usize) -> GradCase {
    const ENTITIES: u32 = 6;
    loop {
        let mut table = EmbeddingTable::new(dim);
        for e in 0..ENTITIES {
            table.ensure_entity(e, rng);
        }
        for r in 0..2 {
            table.ensure_relation(r, rng);
        }
        let mut teachers = incde::trainer::TeacherStore::new();
        let all: Vec<EntityId> = (0..ENTITIES).collect();
        teachers.capture(&table, &all, 0);
        for e in 0..ENTITIES {
            for x in table.entity_mut(e) {
                *x += rng.random_range(-2.0..2.0);
            }
        }
        // 5 positives with one negative each: 10 triples.
        let pairs: Vec<(Triple, Triple)> = (0..5)
            .map(|_| {
                let h = rng.random_range(0..ENTITIES);
                let tl = (h + rng.random_range(1..ENTITIES)) % ENTITIES;
                let r = rng.random_range(0..2);
                let c = (tl + rng.random_range(1..ENTITIES)) % ENTITIES;
                (Triple::new(h, r, tl), Triple::new(h, r, c))
            })
            .collect();
        let weights: Vec<(EntityId, f64)> =
            (0..ENTITIES).filter(|e| e % 3 != 2).map(|e| (e, rng.random_range(0.1..2.0))).collect();
        let logits: Vec<f64> = (0..ENTITIES).map(|_| rng.random_range(-2.0..2.0)).collect();
        let margin = rng.random_range(0.5..4.0);

        let clear = pairs.iter().all(|(p, n)| {
            let residual_ok = |t: &Triple| {
                norm == ScoreNorm::L2
                    || (0..dim).all(|j| {
                        let v = table.entity(t.head)[j] + table.relation(t.relation)[j] - table.entity(t.tail)[j];
                        v.abs() > KINK_CLEARANCE
                    })
            };
            let violation = table.score(p, norm) - table.score(n, norm) + margin;
            violation.abs() > KINK_CLEARANCE && residual_ok(p) && residual_ok(n)
        }) && weights.iter().all(|&(e, _)| {
            let teacher = &teachers.get(e).unwrap().vector;
            table
                .entity(e)
                .iter()
                .zip(teacher)
                .all(|(x, y)| ((x - y).abs() - 1.0).abs() > KINK_CLEARANCE)
        });
        if clear {
            return GradCase {
                table,
                pairs,
                weights,
                teachers,
                logits,
                scale: rng.random_range(0.05..1.0),
                margin,
            };
        }
    }
}

/// Draws a toy layer (6 entities, 2 relations, 5 positive/negative pairs)
/// and compares every partial derivative with a central difference.
pub fn gradient_check<R: Rng>(rng: &mut R, norm: ScoreNorm, dim: usize) -> GradientErrors {
    use incde::trainer::{batch_objective, DistillBatch, Gradients};

    let case = grad_case(rng, norm, dim);
    let objective = |table: &EmbeddingTable, logits: &[f64], ckge: bool, distill: bool| {
        let pairs: &[(Triple, Triple)] = if ckge { &case.pairs } else { &[] };
        let d = distill.then_some(DistillBatch {
            entities: &case.weights,
            teachers: &case.teachers,
            logits,
            scale: case.scale,
        });
        batch_objective(table, norm, case.margin, pairs, d, None).total()
    };

    let mut errors = GradientErrors::default();
    for (ckge, distill) in [(true, false), (false, true), (true, true)] {
        let mut grads = Gradients::new(dim);
        let d = distill.then_some(DistillBatch {
            entities: &case.weights,
            teachers: &case.teachers,
            logits: &case.logits,
            scale: case.scale,
        });
        let pairs: &[(Triple, Triple)] = if ckge { &case.pairs } else { &[] };
        batch_objective(&case.table, norm, case.margin, pairs, d, Some(&mut grads));

        let mut worst: f64 = 0.0;
        for e in 0..case.table.entities.rows() as u32 {
            for j in 0..dim {
                let mut plus = case.table.clone();
                plus.entity_mut(e)[j] += FD_STEP;
                let mut minus = case.table.clone();
                minus.entity_mut(e)[j] -= FD_STEP;
                let numeric = (objective(&plus, &case.logits, ckge, distill)
                    - objective(&minus, &case.logits, ckge, distill))
                    / (2.0 * FD_STEP);
                let analytic = grads.entities.row(e as usize).map_or(0.0, |g| g[j]);
                worst = worst.max(rel_err(analytic, numeric));
            }
        }
        for r in 0..case.table.relations.rows() as u32 {
            for j in 0..dim {
                let mut plus = case.table.clone();
                plus.relation_mut(r)[j] += FD_STEP;
                let mut minus = case.table.clone();
                minus.relation_mut(r)[j] -= FD_STEP;
                let numeric = (objective(&plus, &case.logits, ckge, distill)
                    - objective(&minus, &case.logits, ckge, distill))
                    / (2.0 * FD_STEP);
                let analytic = grads.relations.row(r as usize).map_or(0.0, |g| g[j]);
                worst = worst.max(rel_err(analytic, numeric));
            }
        }
        let mut worst_logit: f64 = 0.0;
        for k in 0..case.logits.len() {
            let mut plus = case.logits.clone();
            plus[k] += FD_STEP;
            let mut minus = case.logits.clone();
            minus[k] -= FD_STEP;
            let numeric = (objective(&case.table, &plus, ckge, distill)
                - objective(&case.table, &minus, ckge, distill))
                / (2.0 * FD_STEP);
            let analytic = grads.logits.row(k).map_or(0.0, |g| g[0]);
            worst_logit = worst_logit.max(rel_err(analytic, numeric));
        }
        match (ckge, distill) {
            (true, false) => errors.ckge = worst.max(worst_logit),
            (false, true) => errors.distill = worst.max(worst_logit),
            _ => {
                errors.total = worst.max(worst_logit);
                errors.logits = worst_logit;
            }
        }
    }
    errors
}

/// One random ranking instance: a model over at most 8 entities (coarse
/// integer coordinates half the time, so ties occur), a random query triple
/// and a random filter set that contains the query triple.
pub struct RankInstance {
    pub table: EmbeddingTable,
    pub norm: ScoreNorm,
    pub triple: Triple,
    pub replace_head: bool,
    pub candidates: Vec<EntityId>,
    pub filter: HashSet<Triple>,
}

pub fn rank_instance<R: Rng>(rng: &mut R) -> RankInstance {
    let n = rng.random_range(2..=8u32);
    let dim = rng.random_range(1..=4usize);
    let mut table = EmbeddingTable::new(dim);
    for e in 0..n {
        table.ensure_entity(e, rng);
    }
    for r in 0..2 {
        table.ensure_relation(r, rng);
    }
    if rng.random_bool(0.5) {
        for x in table.entities.as_mut_slice().iter_mut().chain(table.relations.as_mut_slice()) {
            *x = rng.random_range(-1i32..=1) as f64;
        }
    }
    let triple = Triple::new(rng.random_range(0..n), rng.random_range(0..2), rng.random_range(0..n));
    let mut filter: HashSet<Triple> = random_triples(rng, n, 2, 10).into_iter().collect();
    filter.insert(triple);
    RankInstance {
        table,
        norm: if rng.random_bool(0.5) { ScoreNorm::L1 } else { ScoreNorm::L2 },
        triple,
        replace_head: rng.random_bool(0.5),
        candidates: (0..n).collect(),
        filter,
    }
}

/// Independent check of the plan contract: partition, size cap, reachability.
pub fn check_plan(plan: &LayerPlan, delta: &[Triple], old: &BTreeSet<u32>, m: usize) {
    let mut all: Vec<Triple> = plan.layers.iter().flat_map(|l| l.triples.clone()).collect();
    let mut want = delta.to_vec();
    all.sort();
    want.sort();
    assert_eq!(all, want, "layers must partition the delta");
    let mut seen: HashSet<u32> = old.iter().copied().collect();
    for layer in &plan.layers {
        assert!(!layer.triples.is_empty() && layer.len() <= m);
        assert_eq!(layer.triples.len(), layer.importance.len());
        if !layer.remainder {
            for tr in &layer.triples {
                assert!(seen.contains(&tr.head) || seen.contains(&tr.tail), "{tr} unreachable");
            }
        }
        seen.extend(layer.triples.iter().flat_map(|tr| [tr.head, tr.tail]));
    }
    let remainders = plan.layers.iter().filter(|l| l.remainder).count();
    assert!(plan.layers.iter().skip_while(|l| !l.remainder).all(|l| l.remainder));
    if remainders > 0 {
        // Nothing in the remainder touches an old or earlier-reached entity.
        let reached: HashSet<u32> = old
            .iter()
            .copied()
            .chain(plan.layers.iter().filter(|l| !l.remainder).flat_map(|l| l.entities()))
            .collect();
        for l in plan.layers.iter().filter(|l| l.remainder) {
            assert!(l.triples.iter().all(|tr| !reached.contains(&tr.head) && !reached.contains(&tr.tail)));
        }
    }
}
