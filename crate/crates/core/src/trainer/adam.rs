//! Lazy (sparse) Adam over row-indexed parameters.

use serde::{Deserialize, Serialize};

use super::model::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Accumulates gradients for a subset of rows of a parameter matrix.
#[derive(Debug, Clone)]
pub struct RowGrads {
    cols: usize,
    data: Vec<f64>,
    mark: Vec<bool>,
    touched: Vec<usize>,
}

impl RowGrads {
    pub fn new(cols: usize) -> Self {
        RowGrads {
            cols,
            data: Vec::new(),
            mark: Vec::new(),
            touched: Vec::new(),
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Gradient row `i`, zeroed on first access since the last [`clear`](Self::clear).
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        if i >= self.mark.len() {
            self.mark.resize(i + 1, false);
            self.data.resize((i + 1) * self.cols, 0.0);
        }
        if !self.mark[i] {
            self.mark[i] = true;
            self.touched.push(i);
        }
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row(&self, i: usize) -> Option<&[f64]> {
        (i < self.mark.len() && self.mark[i]).then(|| &self.data[i * self.cols..(i + 1) * self.cols])
    }

    /// Touched rows in first-touch order.
    pub fn touched(&self) -> &[usize] {
        &self.touched
    }

    /// Drops rows for which `keep` is false.
    pub fn retain(&mut self, mut keep: impl FnMut(usize) -> bool) {
        let cols = self.cols;
        let (data, mark) = (&mut self.data, &mut self.mark);
        self.touched.retain(|&i| {
            if keep(i) {
                true
            } else {
                mark[i] = false;
                data[i * cols..(i + 1) * cols].iter_mut().for_each(|x| *x = 0.0);
                false
            }
        });
    }

    pub fn clear(&mut self) {
        for &i in &self.touched {
            self.mark[i] = false;
            self.data[i * self.cols..(i + 1) * self.cols]
                .iter_mut()
                .for_each(|x| *x = 0.0);
        }
        self.touched.clear();
    }

    pub fn is_finite(&self) -> bool {
        self.touched.iter().all(|&i| {
            self.data[i * self.cols..(i + 1) * self.cols]
                .iter()
                .all(|x| x.is_finite())
        })
    }
}

/// First and second moment estimates, same shape as the parameter matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub first: Matrix,
    pub second: Matrix,
}

impl Moments {
    pub fn new(cols: usize) -> Self {
        Moments {
            first: Matrix::zeros(0, cols),
            second: Matrix::zeros(0, cols),
        }
    }

    pub fn ensure_rows(&mut self, rows: usize) {
        self.first.ensure_rows(rows);
        self.second.ensure_rows(rows);
    }
}

/// Applies one bias-corrected Adam update at step `step` (1-based) to every
/// row with a nonzero gradient. Other rows and their moments are untouched.
pub fn adam_step(
    params: &mut Matrix,
    grads: &RowGrads,
    moments: &mut Moments,
    step: u64,
    lr: f64,
    config: &AdamConfig,
) {
    debug_assert!(step >= 1);
    moments.ensure_rows(params.rows());
    let bias1 = 1.0 - config.beta1.powi(step as i32);
    let bias2 = 1.0 - config.beta2.powi(step as i32);
    for &i in grads.touched() {
        let g = grads.row(i).expect("touched row");
        if g.iter().all(|&x| x == 0.0) {
            continue;
        }
        let p = params.row_mut(i);
        let m = moments.first.row_mut(i);
        for (mj, gj) in m.iter_mut().zip(g) {
            *mj = config.beta1 * *mj + (1.0 - config.beta1) * gj;
        }
        let v = moments.second.row_mut(i);
        for (vj, gj) in v.iter_mut().zip(g) {
            *vj = config.beta2 * *vj + (1.0 - config.beta2) * gj * gj;
        }
        let m = moments.first.row(i);
        let v = moments.second.row(i);
        for ((pj, mj), vj) in p.iter_mut().zip(m).zip(v) {
            let m_hat = mj / bias1;
            let v_hat = vj / bias2;
            *pj -= lr * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}

/// Optimizer state for all trainable parameter groups, with a shared step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub entities: Moments,
    pub relations: Moments,
    pub logits: Moments,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        OptimizerState {
            config: AdamConfig::default(),
            step: 0,
            entities: Moments::new(dim),
            relations: Moments::new(dim),
            logits: Moments::new(1),
        }
    }
}
