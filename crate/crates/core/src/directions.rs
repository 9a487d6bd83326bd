//! Update directions for SGD and Adam.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{check_dim, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionKind {
    Sgd,
    Adam,
}

impl DirectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionKind::Sgd => "sgd",
            DirectionKind::Adam => "adam",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam first and second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ParamVector,
    pub v: ParamVector,
    pub k: u64,
    pub params: AdamParams,
}

impl AdamState {
    pub fn new(dim: usize, params: AdamParams) -> Self {
        Self {
            m: ParamVector::zeros(dim),
            v: ParamVector::zeros(dim),
            k: 0,
            params,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `m <- b1 m + (1 - b1) g`, `v <- b2 v + (1 - b2) g^2`, `k <- k + 1`.
    pub fn update_moments(&mut self, grad: &ParamVector) -> Result<()> {
        check_dim(self.dim(), grad.dim())?;
        let AdamParams { beta1, beta2, .. } = self.params;
        for ((m, v), &g) in self
            .m
            .as_mut_slice()
            .iter_mut()
            .zip(self.v.as_mut_slice())
            .zip(grad.iter())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
        }
        self.k += 1;
        Ok(())
    }

    /// Bias-corrected second moment `v / (1 - b2^k)`.
    pub fn v_hat(&self) -> Result<ParamVector> {
        if self.k == 0 {
            return Err(Error::MomentsNotInitialized);
        }
        let correction = 1.0 - self.params.beta2.powi(exp(self.k));
        Ok(self.v.map(|v| v / correction))
    }

    fn m_hat(&self) -> ParamVector {
        let correction = 1.0 - self.params.beta1.powi(exp(self.k));
        self.m.map(|m| m / correction)
    }

    /// Per-coordinate denominators `sqrt(v_hat) + eps`.
    fn denominators(&self) -> Result<ParamVector> {
        let eps = self.params.epsilon;
        Ok(self.v_hat()?.map(|v| v.sqrt() + eps))
    }
}

fn exp(k: u64) -> i32 {
    i32::try_from(k).unwrap_or(i32::MAX)
}

pub fn sgd_direction(grad: &ParamVector) -> ParamVector {
    grad.map(|g| -g)
}

/// Functional form of [`AdamState::update_moments`].
pub fn adam_update_moments(state: &AdamState, grad: &ParamVector) -> Result<AdamState> {
    let mut next = state.clone();
    next.update_moments(grad)?;
    Ok(next)
}

/// `-m_hat / (sqrt(v_hat) + eps)`.
///
/// Without momentum the numerator is the raw gradient; this is the direction
/// the line search probes. With momentum it is the bias-corrected first
/// moment, used for the parameter update itself.
pub fn adam_direction(state: &AdamState, grad: &ParamVector, use_momentum: bool) -> Result<ParamVector> {
    check_dim(state.dim(), grad.dim())?;
    let denom = state.denominators()?;
    let numer = if use_momentum { state.m_hat() } else { grad.clone() };
    numer.zip_map(&denom, |m, d| if m == 0.0 { 0.0 } else { -m / d })
}

/// `sum_i g_i^2 / (sqrt(v_hat_i) + eps)`.
pub fn preconditioned_grad_norm(state: &AdamState, grad: &ParamVector) -> Result<f64> {
    check_dim(state.dim(), grad.dim())?;
    let denom = state.denominators()?;
    Ok(grad
        .iter()
        .zip(denom.iter())
        .map(|(&g, &d)| if g == 0.0 { 0.0 } else { g * g / d })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// State whose bias-corrected second moment equals `v_hat` exactly at k = 1.
    fn state_with_v_hat(v_hat: &[f64], epsilon: f64) -> AdamState {
        let params = AdamParams {
            beta1: 0.9,
            beta2: 0.5,
            epsilon,
        };
        AdamState {
            m: ParamVector::zeros(v_hat.len()),
            v: v_hat.iter().map(|x| x * 0.5).collect::<Vec<_>>().into(),
            k: 1,
            params,
        }
    }

    #[test]
    fn sgd_direction_examples() {
        assert_eq!(sgd_direction(&vec![0.0, 0.0].into()).as_slice(), &[-0.0, -0.0]);
        assert_eq!(sgd_direction(&vec![1.0, -2.0].into()).as_slice(), &[-1.0, 2.0]);
        let v: ParamVector = vec![0.3, -7.0, 1e-9].into();
        assert_eq!(sgd_direction(&sgd_direction(&v)), v);
    }

    #[test]
    fn first_moment_update_from_zero() {
        let s = AdamState::new(2, AdamParams::default());
        let s = adam_update_moments(&s, &vec![1.0, 0.0].into()).unwrap();
        assert!((s.m[0] - 0.1).abs() < 1e-16);
        assert_eq!(s.m[1], 0.0);
        assert!((s.v[0] - 0.001).abs() < 1e-16);
        assert_eq!(s.v[1], 0.0);
        assert_eq!(s.k, 1);
    }

    #[test]
    fn no_momentum_copies_gradient() {
        let mut s = AdamState::new(
            2,
            AdamParams {
                beta1: 0.0,
                ..Default::default()
            },
        );
        s.m = vec![5.0, -3.0].into();
        s.update_moments(&vec![0.25, 2.0].into()).unwrap();
        assert_eq!(s.m.as_slice(), &[0.25, 2.0]);
    }

    #[test]
    fn repeated_moments_match_closed_form() {
        let g: ParamVector = vec![0.7, -1.3, 2.0].into();
        let mut s = AdamState::new(3, AdamParams::default());
        for _ in 0..5 {
            s.update_moments(&g).unwrap();
        }
        // Unrolled recurrence: m_k = sum_{j<k} (1 - b1) b1^j g = (1 - b1^k) g.
        let mut unrolled = 0.0;
        for j in 0..5 {
            unrolled += 0.1 * 0.9f64.powi(j);
        }
        for i in 0..3 {
            let closed = (1.0 - 0.9f64.powi(5)) * g[i];
            assert!((s.m[i] - closed).abs() <= 1e-12 * closed.abs());
            assert!((s.m[i] - unrolled * g[i]).abs() <= 1e-12 * closed.abs());
        }
    }

    #[test]
    fn direction_requires_updated_moments() {
        let s = AdamState::new(1, AdamParams::default());
        assert_eq!(
            adam_direction(&s, &vec![1.0].into(), true),
            Err(Error::MomentsNotInitialized)
        );
    }

    #[test]
    fn direction_without_momentum_uses_raw_gradient() {
        let s = state_with_v_hat(&[4.0], 0.0);
        let d = adam_direction(&s, &vec![2.0].into(), false).unwrap();
        assert_eq!(d.as_slice(), &[-1.0]);
    }

    #[test]
    fn first_step_direction() {
        let s = AdamState::new(2, AdamParams::default());
        let g: ParamVector = vec![1.0, 0.0].into();
        let s = adam_update_moments(&s, &g).unwrap();
        let d = adam_direction(&s, &g, true).unwrap();
        // m_hat = 1, v_hat = 1 -> -1 / (1 + 1e-8)
        let expected = -1.0 / (1.0 + 1e-8);
        assert!((d[0] - expected).abs() < 1e-15);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn zero_gradient_gives_zero_direction() {
        let s = state_with_v_hat(&[1.0, 2.0, 3.0], 1e-8);
        let d = adam_direction(&s, &ParamVector::zeros(3), false).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
        assert_eq!(preconditioned_grad_norm(&s, &ParamVector::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn preconditioned_norm_examples() {
        let s = state_with_v_hat(&[1.0], 0.0);
        assert_eq!(preconditioned_grad_norm(&s, &vec![2.0].into()).unwrap(), 4.0);
    }

    #[test]
    fn preconditioned_norm_matches_reference_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v_hat: Vec<f64> = (0..5).map(|_| rng.random_range(0.01..4.0)).collect();
        let g: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let eps = 1e-3;
        let s = state_with_v_hat(&v_hat, eps);
        let mut reference = 0.0;
        for i in (0..5).rev() {
            reference += g[i] * g[i] / (v_hat[i].sqrt() + eps);
        }
        let got = preconditioned_grad_norm(&s, &g.into()).unwrap();
        assert!((got - reference).abs() <= 1e-12 * reference);
    }

    proptest! {
        #[test]
        fn second_moment_stays_non_negative(
            grads in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 1..40)
        ) {
            let mut s = AdamState::new(4, AdamParams::default());
            for g in grads {
                s.update_moments(&g.into()).unwrap();
                prop_assert!(s.v.iter().all(|&v| v >= 0.0));
            }
        }

        #[test]
        fn unit_preconditioner_reduces_to_sgd(g in prop::collection::vec(-1e3f64..1e3, 1..10)) {
            let s = state_with_v_hat(&vec![1.0; g.len()], 0.0);
            let g = ParamVector::new(g);
            prop_assert_eq!(adam_direction(&s, &g, false).unwrap(), sgd_direction(&g));
            prop_assert_eq!(preconditioned_grad_norm(&s, &g).unwrap(), g.norm_sq());
        }
    }
}
