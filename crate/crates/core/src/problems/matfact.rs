use serde::{Deserialize, Serialize};

use super::{gaussians, rng, streams, Problem};
use crate::error::Result;
use crate::vector::{EvalResult, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatFactConfig {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_noise() -> f64 {
    0.01
}

/// `1/2 (u_i . v_j - M_ij)^2` averaged over sampled entries of `M`.
///
/// Each matrix entry is one sample. Parameters are `U` (rows x rank) followed
/// by `V` (cols x rank), both row-major.
#[derive(Debug, Clone)]
pub struct MatrixFactorization {
    rows: usize,
    cols: usize,
    rank: usize,
    observed: Vec<f64>,
    truth: Vec<f64>,
}

impl MatrixFactorization {
    pub fn new(cfg: MatFactConfig) -> Self {
        assert!(
            cfg.rank >= 1 && cfg.rank <= cfg.rows.min(cfg.cols),
            "rank must be in [1, min(rows, cols)]"
        );
        let scale = 1.0 / (cfg.rank as f64).powf(0.25);
        let truth = gaussians(
            &mut rng(cfg.seed, streams::TRUTH),
            (cfg.rows + cfg.cols) * cfg.rank,
            scale,
        );
        let noise = gaussians(&mut rng(cfg.seed, streams::NOISE), cfg.rows * cfg.cols, cfg.noise);
        let mut problem = Self {
            rows: cfg.rows,
            cols: cfg.cols,
            rank: cfg.rank,
            observed: Vec::new(),
            truth,
        };
        problem.observed = (0..cfg.rows * cfg.cols)
            .map(|e| problem.predict(&problem.truth, e) + noise[e])
            .collect();
        problem
    }

    /// The low-rank factors the observations were generated from.
    pub fn ground_truth(&self) -> ParamVector {
        self.truth.clone().into()
    }

    fn u<'a>(&self, w: &'a [f64], i: usize) -> &'a [f64] {
        &w[i * self.rank..(i + 1) * self.rank]
    }

    fn v<'a>(&self, w: &'a [f64], j: usize) -> &'a [f64] {
        let off = self.rows * self.rank;
        &w[off + j * self.rank..off + (j + 1) * self.rank]
    }

    fn predict(&self, w: &[f64], entry: usize) -> f64 {
        let (i, j) = (entry / self.cols, entry % self.cols);
        self.u(w, i).iter().zip(self.v(w, j)).map(|(a, b)| a * b).sum()
    }

    /// Scales `U` by `alpha` and `V` by `1 / alpha`.
    pub fn rescale(&self, w: &ParamVector, alpha: f64) -> ParamVector {
        let split = self.rows * self.rank;
        w.iter()
            .enumerate()
            .map(|(i, &x)| if i < split { x * alpha } else { x / alpha })
            .collect::<Vec<_>>()
            .into()
    }
}

impl Problem for MatrixFactorization {
    fn name(&self) -> &str {
        "matrix_factorization"
    }

    fn dim(&self) -> usize {
        (self.rows + self.cols) * self.rank
    }

    fn dataset_size(&self) -> usize {
        self.rows * self.cols
    }

    fn loss(&self, w: &ParamVector, batch: &[usize]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|&e| {
                let r = self.predict(w, e) - self.observed[e];
                0.5 * r * r
            })
            .sum();
        total / batch.len() as f64
    }

    fn loss_grad(&self, w: &ParamVector, batch: &[usize]) -> Result<EvalResult> {
        let mut grad = vec![0.0; self.dim()];
        let mut total = 0.0;
        let off = self.rows * self.rank;
        for &e in batch {
            let (i, j) = (e / self.cols, e % self.cols);
            let r = self.predict(w, e) - self.observed[e];
            total += 0.5 * r * r;
            for t in 0..self.rank {
                let (ui, vj) = (w[i * self.rank + t], w[off + j * self.rank + t]);
                grad[i * self.rank + t] += r * vj;
                grad[off + j * self.rank + t] += r * ui;
            }
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        EvalResult::new(total / n, grad.into(), self.dim())
    }

    fn initial_point(&self, seed: u64) -> ParamVector {
        gaussians(&mut rng(seed, streams::INIT), self.dim(), 0.3).into()
    }
}
