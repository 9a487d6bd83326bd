//! Small objectives with analytic gradients and deterministic batching.

mod dataset;
mod logreg;
mod matfact;
mod mlp;
mod quadratic;
mod sampler;

pub use dataset::{load_csv_dataset, Dataset};
pub use logreg::{LogReg, LogRegConfig};
pub use matfact::{MatFactConfig, MatrixFactorization};
pub use mlp::{Mlp, MlpConfig};
pub use quadratic::Quadratic;
pub use sampler::BatchSampler;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::vector::{EvalResult, ParamVector};

/// A (possibly stochastic) objective over a finite dataset.
///
/// Losses are means over the given sample indices, so mini-batch values are
/// comparable across batch sizes. Deterministic problems have a dataset of
/// size one.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn dataset_size(&self) -> usize;

    /// Mini-batch loss; may be non-finite far from sensible parameters.
    fn loss(&self, w: &ParamVector, batch: &[usize]) -> f64;

    /// Mini-batch loss and gradient. Non-finite values are an error.
    fn loss_grad(&self, w: &ParamVector, batch: &[usize]) -> Result<EvalResult>;

    fn full_loss(&self, w: &ParamVector) -> f64 {
        self.loss(w, &self.all_indices())
    }

    fn all_indices(&self) -> Vec<usize> {
        (0..self.dataset_size()).collect()
    }

    /// Known optimal loss, where available.
    fn optimum_hint(&self) -> Option<f64> {
        None
    }

    /// Seeded starting point.
    fn initial_point(&self, seed: u64) -> ParamVector;

    /// Held-out accuracy, for classification problems.
    fn validation_accuracy(&self, _w: &ParamVector) -> Option<f64> {
        None
    }
}

/// Central differences of the full-batch loss.
pub fn finite_diff_grad(problem: &dyn Problem, w: &ParamVector, h: f64) -> ParamVector {
    let mut probe = w.clone();
    let mut grad = Vec::with_capacity(w.dim());
    for i in 0..w.dim() {
        let orig = probe[i];
        probe.as_mut_slice()[i] = orig + h;
        let up = problem.full_loss(&probe);
        probe.as_mut_slice()[i] = orig - h;
        let down = problem.full_loss(&probe);
        probe.as_mut_slice()[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    grad.into()
}

/// `||a - b|| / max(||a||, ||b||, floor)`.
pub fn relative_error(a: &ParamVector, b: &ParamVector, floor: f64) -> f64 {
    let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
    let scale = a.norm_sq().sqrt().max(b.norm_sq().sqrt()).max(floor);
    diff.sqrt() / scale
}

/// Independent generator for `(seed, stream)`.
pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Streams used when generating problem data.
pub(crate) mod streams {
    pub const DATA: u64 = 1;
    pub const TRUTH: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const INIT: u64 = 5;
    pub const BATCHES: u64 = 1 << 32;
}

pub(crate) fn gaussians(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

/// Numerically stable `ln(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
