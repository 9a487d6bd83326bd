use super::{gaussians, rng, streams, Problem};
use crate::error::Result;
use crate::vector::{EvalResult, ParamVector};

/// `f(w) = 1/2 (w - w*)^T A (w - w*)` with diagonal `A`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    curvature: Vec<f64>,
    optimum: Vec<f64>,
}

impl Quadratic {
    /// Eigenvalues log-spaced over `[1, cond]`, optimum drawn from `seed`.
    pub fn new(dim: usize, cond: f64, seed: u64) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert!(cond >= 1.0, "condition number must be >= 1");
        let curvature = (0..dim)
            .map(|i| {
                if dim == 1 {
                    1.0
                } else {
                    cond.powf(i as f64 / (dim - 1) as f64)
                }
            })
            .collect();
        let optimum = gaussians(&mut rng(seed, streams::TRUTH), dim, 1.0);
        Self { curvature, optimum }
    }

    pub fn from_parts(curvature: Vec<f64>, optimum: Vec<f64>) -> Self {
        assert_eq!(curvature.len(), optimum.len());
        Self { curvature, optimum }
    }

    pub fn optimum(&self) -> ParamVector {
        self.optimum.clone().into()
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.curvature.len()
    }

    fn dataset_size(&self) -> usize {
        1
    }

    fn loss(&self, w: &ParamVector, _batch: &[usize]) -> f64 {
        self.curvature
            .iter()
            .zip(&self.optimum)
            .zip(w.iter())
            .map(|((a, o), x)| 0.5 * a * (x - o) * (x - o))
            .sum()
    }

    fn loss_grad(&self, w: &ParamVector, batch: &[usize]) -> Result<EvalResult> {
        let grad: Vec<f64> = self
            .curvature
            .iter()
            .zip(&self.optimum)
            .zip(w.iter())
            .map(|((a, o), x)| a * (x - o))
            .collect();
        EvalResult::new(self.loss(w, batch), grad.into(), self.dim())
    }

    fn optimum_hint(&self) -> Option<f64> {
        Some(0.0)
    }

    fn initial_point(&self, seed: u64) -> ParamVector {
        let noise = gaussians(&mut rng(seed, streams::INIT), self.dim(), 1.0);
        self.optimum
            .iter()
            .zip(noise)
            .map(|(o, z)| o + z)
            .collect::<Vec<_>>()
            .into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{finite_diff_grad, relative_error};

    #[test]
    fn one_dimensional_case() {
        let q = Quadratic::new(1, 1.0, 4);
        let w_star = q.optimum();
        let eval = q.loss_grad(&w_star, &[0]).unwrap();
        assert_eq!(eval.loss, 0.0);
        assert_eq!(eval.grad[0], 0.0);
        let w: ParamVector = vec![w_star[0] + 2.0].into();
        assert_eq!(q.full_loss(&w), 2.0);
    }

    #[test]
    fn eigenvalues_span_condition_number() {
        let q = Quadratic::new(10, 100.0, 1);
        assert_eq!(q.curvature()[0], 1.0);
        assert!((q.curvature()[9] - 100.0).abs() < 1e-12);
        assert_eq!(q.full_loss(&q.optimum()), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let q = Quadratic::new(6, 50.0, 2);
        for seed in 0..5 {
            let w = q.initial_point(seed);
            let analytic = q.loss_grad(&w, &[0]).unwrap().grad;
            let fd = finite_diff_grad(&q, &w, 1e-5);
            assert!(relative_error(&analytic, &fd, 1e-12) <= 1e-6);
        }
    }
}
