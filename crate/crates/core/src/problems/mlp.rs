use serde::{Deserialize, Serialize};

use super::{gaussians, rng, sigmoid, softplus, streams, Dataset, Problem};
use crate::error::Result;
use crate::vector::{EvalResult, ParamVector};

const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub n: usize,
    pub in_dim: usize,
    pub hidden: usize,
    pub seed: u64,
}

/// One hidden `tanh` layer with a sigmoid output and binary cross-entropy.
///
/// Parameter layout: `W1` (hidden x in, row-major), `b1` (hidden),
/// `w2` (hidden), `b2` (1).
#[derive(Debug, Clone)]
pub struct Mlp {
    train: Dataset,
    valid: Dataset,
    hidden: usize,
}

struct Forward {
    activations: Vec<f64>,
    logit: f64,
}

impl Mlp {
    /// Two overlapping Gaussian clusters, one per class. The cluster centres
    /// are `+mu` / `-mu`; a quadratic term in the first feature bends the
    /// decision boundary so a linear model cannot fit it exactly.
    pub fn new(cfg: MlpConfig) -> Self {
        assert!(cfg.hidden >= 1, "need at least one hidden unit");
        assert!(cfg.in_dim >= 1, "need at least one input");
        let mu = gaussians(
            &mut rng(cfg.seed, streams::TRUTH),
            cfg.in_dim,
            1.0 / (cfg.in_dim as f64).sqrt(),
        );
        let noise = gaussians(&mut rng(cfg.seed, streams::DATA), cfg.n * cfg.in_dim, 1.0);
        let mut features = Vec::with_capacity(cfg.n * cfg.in_dim);
        let mut labels = Vec::with_capacity(cfg.n);
        for (i, z) in noise.chunks(cfg.in_dim).enumerate() {
            let label = (i % 2) as f64;
            let sign = 2.0 * label - 1.0;
            let bend = 0.5 * z[0] * z[0];
            features.extend(z.iter().zip(&mu).enumerate().map(|(j, (zj, m))| {
                let x = sign * 1.5 * m + zj;
                if j == 0 {
                    x
                } else {
                    x + sign * bend / cfg.in_dim as f64
                }
            }));
            labels.push(label);
        }
        let data = Dataset::new(features, labels, cfg.in_dim).expect("generated data is well formed");
        Self::from_dataset(&data, cfg.hidden, cfg.seed)
    }

    pub fn from_dataset(data: &Dataset, hidden: usize, seed: u64) -> Self {
        let (train, valid) = data.split(VALIDATION_FRACTION, seed);
        Self { train, valid, hidden }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn in_dim(&self) -> usize {
        self.train.dim()
    }

    fn forward(&self, w: &[f64], x: &[f64]) -> Forward {
        let (h, d) = (self.hidden, self.in_dim());
        let (w1, rest) = w.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        let activations: Vec<f64> = (0..h)
            .map(|j| {
                let pre: f64 = w1[j * d..(j + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
                (pre + b1[j]).tanh()
            })
            .collect();
        let logit = activations.iter().zip(w2).map(|(a, b)| a * b).sum::<f64>() + b2[0];
        Forward { activations, logit }
    }

    /// Reorders hidden units; the network function is unchanged.
    pub fn permute_hidden(&self, w: &ParamVector, perm: &[usize]) -> ParamVector {
        let (h, d) = (self.hidden, self.in_dim());
        assert_eq!(perm.len(), h);
        let mut out = w.clone();
        let dst = out.as_mut_slice();
        for (new, &old) in perm.iter().enumerate() {
            dst[new * d..(new + 1) * d].copy_from_slice(&w.as_slice()[old * d..(old + 1) * d]);
            dst[h * d + new] = w[h * d + old];
            dst[h * d + h + new] = w[h * d + h + old];
        }
        out
    }
}

impl Problem for Mlp {
    fn name(&self) -> &str {
        "mlp"
    }

    fn dim(&self) -> usize {
        self.hidden * self.in_dim() + 2 * self.hidden + 1
    }

    fn dataset_size(&self) -> usize {
        self.train.len()
    }

    fn loss(&self, w: &ParamVector, batch: &[usize]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|&i| {
                let z = self.forward(w, self.train.row(i)).logit;
                softplus(z) - self.train.label(i) * z
            })
            .sum();
        total / batch.len() as f64
    }

    fn loss_grad(&self, w: &ParamVector, batch: &[usize]) -> Result<EvalResult> {
        let (h, d) = (self.hidden, self.in_dim());
        let mut grad = vec![0.0; self.dim()];
        let mut total = 0.0;
        let w2 = &w.as_slice()[h * d + h..h * d + 2 * h];
        for &i in batch {
            let x = self.train.row(i);
            let y = self.train.label(i);
            let fwd = self.forward(w, x);
            total += softplus(fwd.logit) - y * fwd.logit;
            let dz = sigmoid(fwd.logit) - y;
            let (g_w1, rest) = grad.split_at_mut(h * d);
            let (g_b1, rest) = rest.split_at_mut(h);
            let (g_w2, g_b2) = rest.split_at_mut(h);
            g_b2[0] += dz;
            for j in 0..h {
                let a = fwd.activations[j];
                g_w2[j] += dz * a;
                let da = dz * w2[j] * (1.0 - a * a);
                g_b1[j] += da;
                for (g, xk) in g_w1[j * d..(j + 1) * d].iter_mut().zip(x) {
                    *g += da * xk;
                }
            }
        }
        let n = batch.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        EvalResult::new(total / n, grad.into(), self.dim())
    }

    fn initial_point(&self, seed: u64) -> ParamVector {
        let (h, d) = (self.hidden, self.in_dim());
        let mut r = rng(seed, streams::INIT);
        let mut w = gaussians(&mut r, h * d, 1.0 / (d as f64).sqrt());
        w.extend(std::iter::repeat_n(0.0, h));
        w.extend(gaussians(&mut r, h, 1.0 / (h as f64).sqrt()));
        w.push(0.0);
        w.into()
    }

    fn validation_accuracy(&self, w: &ParamVector) -> Option<f64> {
        if self.valid.is_empty() {
            return None;
        }
        let correct = (0..self.valid.len())
            .filter(|&i| (self.forward(w, self.valid.row(i)).logit > 0.0) == (self.valid.label(i) > 0.5))
            .count();
        Some(correct as f64 / self.valid.len() as f64)
    }
}
