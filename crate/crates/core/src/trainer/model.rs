use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, RelationId, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreNorm {
    #[default]
    L1,
    L2,
}

impl std::str::FromStr for ScoreNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(ScoreNorm::L1),
            "l2" => Ok(ScoreNorm::L2),
            other => Err(Error::Config(format!("unknown score norm `{other}`"))),
        }
    }
}

/// TransE distance `|h + r - t|`; lower is better.
pub fn transe_score(h: &[f64], r: &[f64], t: &[f64], norm: ScoreNorm) -> Result<f64> {
    if h.len() != r.len() || h.len() != t.len() {
        return Err(Error::DimensionMismatch {
            left: h.len(),
            right: if h.len() != r.len() { r.len() } else { t.len() },
        });
    }
    Ok(score_unchecked(h, r, t, norm))
}

#[inline]
pub(crate) fn score_unchecked(h: &[f64], r: &[f64], t: &[f64], norm: ScoreNorm) -> f64 {
    let residuals = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t);
    match norm {
        ScoreNorm::L1 => residuals.map(f64::abs).sum(),
        ScoreNorm::L2 => residuals.map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// Gradient of the score with respect to the residual `h + r - t`, written to `out`.
/// The derivative with respect to `h` and `r` is `out`, with respect to `t` it is `-out`.
pub(crate) fn score_residual_grad(h: &[f64], r: &[f64], t: &[f64], norm: ScoreNorm, out: &mut [f64]) {
    for (((o, h), r), t) in out.iter_mut().zip(h).zip(r).zip(t) {
        *o = h + r - t;
    }
    match norm {
        ScoreNorm::L1 => out.iter_mut().for_each(|x| {
            *x = if *x > 0.0 {
                1.0
            } else if *x < 0.0 {
                -1.0
            } else {
                0.0
            }
        }),
        ScoreNorm::L2 => {
            let n = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                out.iter_mut().for_each(|x| *x /= n);
            }
        }
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Grows to at least `rows` rows, new rows zeroed.
    pub fn ensure_rows(&mut self, rows: usize) {
        if rows > self.rows {
            self.data.resize(rows * self.cols, 0.0);
            self.rows = rows;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Entity and relation vectors, indexed by vocabulary id.
///
/// Rows exist for every id up to the largest one seen; `*_known` marks the
/// rows that have been initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    pub entities: Matrix,
    pub relations: Matrix,
    entity_known: Vec<bool>,
    relation_known: Vec<bool>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            entities: Matrix::zeros(0, dim),
            relations: Matrix::zeros(0, dim),
            entity_known: Vec::new(),
            relation_known: Vec::new(),
        }
    }

    pub(crate) fn from_parts(
        entities: Matrix,
        relations: Matrix,
        entity_known: Vec<bool>,
        relation_known: Vec<bool>,
    ) -> Self {
        EmbeddingTable {
            dim: entities.cols(),
            entities,
            relations,
            entity_known,
            relation_known,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn init_bound(&self) -> f64 {
        6.0 / (self.dim as f64).sqrt()
    }

    /// Initializes the row of `id` uniformly in `[-6/sqrt(d), 6/sqrt(d)]` unless it
    /// already holds a vector. Returns whether a new row was created.
    pub fn ensure_entity<R: Rng + ?Sized>(&mut self, id: EntityId, rng: &mut R) -> bool {
        let bound = self.init_bound();
        ensure_row(&mut self.entities, &mut self.entity_known, id, bound, rng)
    }

    pub fn ensure_relation<R: Rng + ?Sized>(&mut self, id: RelationId, rng: &mut R) -> bool {
        let bound = self.init_bound();
        ensure_row(&mut self.relations, &mut self.relation_known, id, bound, rng)
    }

    pub fn has_entity(&self, id: EntityId) -> bool {
        self.entity_known.get(id as usize).copied().unwrap_or(false)
    }

    pub fn has_relation(&self, id: RelationId) -> bool {
        self.relation_known.get(id as usize).copied().unwrap_or(false)
    }

    pub fn entity_mask(&self) -> &[bool] {
        &self.entity_known
    }

    pub fn relation_mask(&self) -> &[bool] {
        &self.relation_known
    }

    pub fn entity(&self, id: EntityId) -> &[f64] {
        self.entities.row(id as usize)
    }

    pub fn relation(&self, id: RelationId) -> &[f64] {
        self.relations.row(id as usize)
    }

    pub fn entity_mut(&mut self, id: EntityId) -> &mut [f64] {
        self.entities.row_mut(id as usize)
    }

    pub fn relation_mut(&mut self, id: RelationId) -> &mut [f64] {
        self.relations.row_mut(id as usize)
    }

    pub fn score(&self, triple: &Triple, norm: ScoreNorm) -> f64 {
        score_unchecked(
            self.entity(triple.head),
            self.relation(triple.relation),
            self.entity(triple.tail),
            norm,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.entities.as_slice().iter().all(|x| x.is_finite())
            && self.relations.as_slice().iter().all(|x| x.is_finite())
    }
}

fn ensure_row<R: Rng + ?Sized>(
    matrix: &mut Matrix,
    known: &mut Vec<bool>,
    id: u32,
    bound: f64,
    rng: &mut R,
) -> bool {
    let i = id as usize;
    if known.get(i).copied().unwrap_or(false) {
        return false;
    }
    matrix.ensure_rows(i + 1);
    if known.len() <= i {
        known.resize(i + 1, false);
    }
    for x in matrix.row_mut(i) {
        *x = rng.random_range(-bound..bound);
    }
    known[i] = true;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn score_examples() {
        let s = transe_score(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0], ScoreNorm::L1).unwrap();
        assert_eq!(s, 0.0);
        let s = transe_score(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], ScoreNorm::L1).unwrap();
        assert_eq!(s, 2.0);
        let s = transe_score(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], ScoreNorm::L2).unwrap();
        assert_eq!(s, 2f64.sqrt());
    }

    #[test]
    fn score_dimension_mismatch() {
        assert!(matches!(
            transe_score(&[1.0], &[1.0, 2.0], &[0.0], ScoreNorm::L1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rows_are_initialized_once_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut table = EmbeddingTable::new(16);
        assert!(table.ensure_entity(4, &mut rng));
        let before = table.entity(4).to_vec();
        assert!(!table.ensure_entity(4, &mut rng));
        assert_eq!(table.entity(4), &before[..]);
        assert!(!table.has_entity(2));
        let bound = table.init_bound();
        assert!(before.iter().all(|x| x.abs() <= bound));
    }
}
