use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gaussians, rng, sigmoid, softplus, streams, Dataset, Problem};
use crate::error::Result;
use crate::vector::{EvalResult, ParamVector};

pub const L2_PENALTY: f64 = 1e-4;
pub const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// Total samples before the train/validation split.
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub label_noise: f64,
}

/// L2-regularised logistic regression on synthetic Gaussian data.
#[derive(Debug, Clone)]
pub struct LogReg {
    train: Dataset,
    valid: Dataset,
    true_w: Option<Vec<f64>>,
}

impl LogReg {
    /// Features `x ~ N(0, I)`, labels from a random hyperplane through the
    /// origin, each flipped with probability `label_noise`.
    pub fn new(cfg: LogRegConfig) -> Self {
        assert!(
            (0.0..0.5).contains(&cfg.label_noise),
            "label_noise must lie in [0, 0.5)"
        );
        let truth = gaussians(
            &mut rng(cfg.seed, streams::TRUTH),
            cfg.dim,
            1.0 / (cfg.dim as f64).sqrt(),
        );
        let features = gaussians(&mut rng(cfg.seed, streams::DATA), cfg.n * cfg.dim, 1.0);
        let mut flips = rng(cfg.seed, streams::NOISE);
        let labels = features
            .chunks(cfg.dim)
            .map(|x| {
                let clean = dot(x, &truth) > 0.0;
                let flip = flips.random::<f64>() < cfg.label_noise;
                if clean != flip {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let data = Dataset::new(features, labels, cfg.dim).expect("generated data is well formed");
        let mut problem = Self::from_dataset(&data, cfg.seed);
        problem.true_w = Some(truth);
        problem
    }

    /// Holds out a seeded 20% validation split.
    pub fn from_dataset(data: &Dataset, seed: u64) -> Self {
        let (train, valid) = data.split(VALIDATION_FRACTION, seed);
        Self {
            train,
            valid,
            true_w: None,
        }
    }

    /// The generating hyperplane, for synthetic problems.
    pub fn true_weights(&self) -> Option<ParamVector> {
        self.true_w.clone().map(Into::into)
    }

    /// Unregularised loss of one training sample.
    pub fn sample_loss(&self, w: &ParamVector, i: usize) -> f64 {
        let margin = signed(self.train.label(i)) * dot(self.train.row(i), w);
        softplus(-margin)
    }

    fn penalty(w: &ParamVector) -> f64 {
        L2_PENALTY * w.norm_sq()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn signed(label: f64) -> f64 {
    2.0 * label - 1.0
}

impl Problem for LogReg {
    fn name(&self) -> &str {
        "logreg"
    }

    fn dim(&self) -> usize {
        self.train.dim()
    }

    fn dataset_size(&self) -> usize {
        self.train.len()
    }

    fn loss(&self, w: &ParamVector, batch: &[usize]) -> f64 {
        let total: f64 = batch.iter().map(|&i| self.sample_loss(w, i)).sum();
        total / batch.len() as f64 + Self::penalty(w)
    }

    fn loss_grad(&self, w: &ParamVector, batch: &[usize]) -> Result<EvalResult> {
        let mut grad = vec![0.0; self.dim()];
        let mut total = 0.0;
        for &i in batch {
            let x = self.train.row(i);
            let y = signed(self.train.label(i));
            let margin = y * dot(x, w);
            total += softplus(-margin);
            // d/dz softplus(-y z) = -y sigmoid(-y z)
            let coef = -y * sigmoid(-margin);
            for (g, xi) in grad.iter_mut().zip(x) {
                *g += coef * xi;
            }
        }
        let n = batch.len() as f64;
        for (g, wi) in grad.iter_mut().zip(w.iter()) {
            *g = *g / n + 2.0 * L2_PENALTY * wi;
        }
        EvalResult::new(total / n + Self::penalty(w), grad.into(), self.dim())
    }

    fn initial_point(&self, seed: u64) -> ParamVector {
        gaussians(&mut rng(seed, streams::INIT), self.dim(), 0.1).into()
    }

    fn validation_accuracy(&self, w: &ParamVector) -> Option<f64> {
        if self.valid.is_empty() {
            return None;
        }
        let correct = (0..self.valid.len())
            .filter(|&i| (dot(self.valid.row(i), w) > 0.0) == (self.valid.label(i) > 0.5))
            .count();
        Some(correct as f64 / self.valid.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{finite_diff_grad, relative_error};

    fn small(noise: f64) -> LogReg {
        LogReg::new(LogRegConfig {
            n: 400,
            dim: 8,
            seed: 21,
            label_noise: noise,
        })
    }

    #[test]
    fn split_sizes() {
        let p = small(0.1);
        assert_eq!(p.dataset_size(), 320);
        assert_eq!(p.dim(), 8);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = small(0.1);
        for seed in 0..5 {
            let w = p.initial_point(seed).scaled(10.0);
            let analytic = p.loss_grad(&w, &p.all_indices()).unwrap().grad;
            let fd = finite_diff_grad(&p, &w, 1e-5);
            assert!(relative_error(&analytic, &fd, 1e-12) <= 1e-5);
        }
    }

    #[test]
    fn full_loss_is_mean_of_sample_losses() {
        let p = small(0.2);
        let w = p.initial_point(4);
        let mut sum = 0.0;
        for i in 0..p.dataset_size() {
            let x = p.train.row(i);
            let z: f64 = x.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            let y = if p.train.label(i) > 0.5 { 1.0 } else { -1.0 };
            sum += (1.0 + (-y * z).exp()).ln();
        }
        let reference = sum / p.dataset_size() as f64 + L2_PENALTY * w.norm_sq();
        let got = p.full_loss(&w);
        assert!((got - reference).abs() <= 1e-12 * reference);
    }

    #[test]
    fn separable_data_leaves_only_the_penalty() {
        let p = small(0.0);
        let w = p.true_weights().unwrap().scaled(1e6);
        let loss = p.full_loss(&w);
        let penalty = L2_PENALTY * w.norm_sq();
        assert!((loss - penalty).abs() <= 1e-9 * penalty);
        assert_eq!(p.validation_accuracy(&w), Some(1.0));
    }

    #[test]
    fn zero_weights_give_ln2() {
        let p = small(0.1);
        let w = ParamVector::zeros(8);
        assert!((p.full_loss(&w) - std::f64::consts::LN_2).abs() < 1e-13);
    }
}
