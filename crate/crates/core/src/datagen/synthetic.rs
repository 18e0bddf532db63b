use std::collections::HashSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BaseKg;
use crate::error::{Error, Result};
use crate::kg::Triple;

/// Parameters of a synthetic KG with planted translational structure.
///
/// Entities get latent points in `[-1, 1]^latent_dim` and relations latent
/// offsets; the tail of `(h, r, ?)` is drawn from the `tail_choices` entities
/// nearest to `h + r`. With probability `inverse_fraction` a fact also gets
/// its reverse `(t, r_inv, h)` under a companion relation, so some test
/// triples can only be answered by remembering one specific training fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticKgConfig {
    pub num_entities: usize,
    pub num_relations: usize,
    pub num_triples: usize,
    pub latent_dim: usize,
    pub relation_scale: f64,
    pub tail_choices: usize,
    pub inverse_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticKgConfig {
    fn default() -> Self {
        SyntheticKgConfig {
            num_entities: 300,
            num_relations: 12,
            num_triples: 2000,
            latent_dim: 6,
            relation_scale: 0.6,
            tail_choices: 2,
            inverse_fraction: 0.0,
            seed: 0,
        }
    }
}

pub fn generate_base_kg(config: &SyntheticKgConfig) -> Result<BaseKg> {
    let (n, m, k) = (config.num_entities, config.num_relations, config.latent_dim);
    if n < 2 || m == 0 || k == 0 || config.tail_choices == 0 {
        return Err(Error::Config(
            "synthetic KG needs >= 2 entities, >= 1 relation, latent_dim >= 1 and tail_choices >= 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.inverse_fraction) {
        return Err(Error::Config("inverse_fraction must lie in [0, 1]".into()));
    }
    let capacity = n * m * config.tail_choices.min(n - 1);
    if config.num_triples > capacity / 2 {
        return Err(Error::Config(format!(
            "{} triples is too dense for {n} entities and {m} relations",
            config.num_triples
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let offsets: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..k)
                .map(|_| rng.random_range(-config.relation_scale..config.relation_scale))
                .collect()
        })
        .collect();

    let mut kg = BaseKg::default();
    for i in 0..n {
        kg.vocab.entities.get_or_insert(&format!("e{i}"));
    }
    for j in 0..m {
        kg.vocab.relations.get_or_insert(&format!("r{j}"));
    }
    let inverses = config.inverse_fraction > 0.0;
    if inverses {
        for j in 0..m {
            kg.vocab.relations.get_or_insert(&format!("r{j}_inv"));
        }
    }

    let mut seen = HashSet::with_capacity(config.num_triples);
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    while kg.triples.len() < config.num_triples {
        let h = rng.random_range(0..n);
        let r = rng.random_range(0..m);
        dist.clear();
        dist.extend((0..n).filter(|&t| t != h).map(|t| {
            let d: f64 = (0..k)
                .map(|c| (points[h][c] + offsets[r][c] - points[t][c]).powi(2))
                .sum();
            (d, t)
        }));
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let t = dist[rng.random_range(0..config.tail_choices.min(dist.len()))].1;
        let triple = Triple::new(h as u32, r as u32, t as u32);
        if !seen.insert(triple) {
            continue;
        }
        kg.triples.push(triple);
        if inverses && kg.triples.len() < config.num_triples && rng.random_bool(config.inverse_fraction) {
            let reverse = Triple::new(t as u32, (m + r) as u32, h as u32);
            if seen.insert(reverse) {
                kg.triples.push(reverse);
            }
        }
    }
    Ok(kg)
}
