//! Stochastic Armijo line search (SLS) with step re-growth and backtracking.

use serde::{Deserialize, Serialize};

use crate::directions::{
    adam_direction, preconditioned_grad_norm, sgd_direction, AdamParams, AdamState, DirectionKind,
};
use crate::error::{Error, Result};
use crate::frequency::FreqState;
use crate::optimizer::{Batch, Optimizer, StepOutcome};
use crate::problems::Problem;
use crate::trace::{Criterion, CriterionCheck, StepRecord};
use crate::vector::{axpy, norm_sq, ParamVector};

/// Step-size control shared by SLS and SaLSa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    /// Shrink factor applied per backtrack.
    pub delta: f64,
    /// Re-growth exponent: each search starts from `eta_prev * 2^(1/b)`.
    pub b: f64,
    /// Searches are skipped when `||grad|| <= grad_eps`.
    pub grad_eps: f64,
    pub max_backtracks: u32,
    pub eta_init: f64,
    pub eta_min: f64,
    pub eta_max: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            delta: 0.9,
            b: 500.0,
            grad_eps: 1e-8,
            max_backtracks: 100,
            eta_init: 1.0,
            eta_min: 1e-10,
            eta_max: 10.0,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.b > 0.0) {
            return bad("b must be positive");
        }
        if !(self.eta_min > 0.0 && self.eta_min < self.eta_init && self.eta_init <= self.eta_max) {
            return bad("need 0 < eta_min < eta_init <= eta_max");
        }
        if !(self.grad_eps >= 0.0) {
            return bad("grad_eps must be non-negative");
        }
        Ok(())
    }

    /// True when the gradient is too small for a meaningful search.
    pub fn gradient_is_tiny(&self, grad_norm_sq: f64) -> bool {
        grad_norm_sq <= self.grad_eps * self.grad_eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlsConfig {
    pub c: f64,
    #[serde(flatten)]
    pub search: SearchParams,
}

impl Default for SlsConfig {
    fn default() -> Self {
        Self {
            c: 0.1,
            search: SearchParams::default(),
        }
    }
}

impl SlsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::InvalidConfig("c must lie in (0, 1)".into()));
        }
        self.search.validate()
    }
}

/// `eta_prev * 2^(1/b)`, capped at `eta_max`.
pub fn propose_initial_step(eta_prev: f64, b: f64, eta_max: f64) -> f64 {
    (eta_prev * 2f64.powf(1.0 / b)).min(eta_max)
}

/// `loss_trial <= loss0 - c * eta * gnorm_term`. NaN trial losses fail.
pub fn armijo_holds(loss0: f64, loss_trial: f64, eta: f64, c: f64, gnorm_term: f64) -> bool {
    loss_trial <= loss0 - c * eta * gnorm_term
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacktrackOutcome {
    pub eta: f64,
    pub backtracks: u32,
    pub loss_trial: f64,
    /// False if the budget ran out (or `eta_min` was reached) without success.
    pub accepted: bool,
}

/// Shrinks `eta` by `delta` until `accept(eta)` holds.
///
/// `accept` evaluates the objective at the candidate and returns the trial
/// loss with the verdict. Trials never go below `eta_min`; once the floor or
/// the backtrack budget is reached without success the last trial is
/// returned with `accepted = false`. Exactly `backtracks + 1` trials run.
pub(crate) fn shrink_search(
    eta_start: f64,
    params: &SearchParams,
    mut accept: impl FnMut(f64) -> (f64, bool),
) -> BacktrackOutcome {
    let mut eta = eta_start.max(params.eta_min);
    let mut backtracks = 0;
    loop {
        let (loss_trial, ok) = accept(eta);
        if ok {
            return BacktrackOutcome {
                eta,
                backtracks,
                loss_trial,
                accepted: true,
            };
        }
        if backtracks >= params.max_backtracks || eta <= params.eta_min {
            return BacktrackOutcome {
                eta,
                backtracks,
                loss_trial,
                accepted: false,
            };
        }
        eta = (eta * params.delta).max(params.eta_min);
        backtracks += 1;
    }
}

/// Armijo backtracking along `d` on a fixed mini-batch.
///
/// `objective` must evaluate the same batch that produced `loss0` and
/// `gnorm_term`. Non-finite trial losses count as violations.
pub fn backtrack(
    mut objective: impl FnMut(&ParamVector) -> f64,
    w: &ParamVector,
    d: &ParamVector,
    eta_start: f64,
    loss0: f64,
    gnorm_term: f64,
    c: f64,
    params: &SearchParams,
) -> Result<BacktrackOutcome> {
    let mut failure = None;
    let out = shrink_search(eta_start, params, |eta| match axpy(eta, d, w) {
        Ok(trial) => {
            let loss = objective(&trial);
            (loss, armijo_holds(loss0, loss, eta, c, gnorm_term))
        }
        Err(e) => {
            failure = Some(e);
            (f64::NAN, true)
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Search direction and the matching gradient-norm term.
///
/// SGD: `(-g, ||g||^2)`. Adam: the momentum-free preconditioned direction
/// and `sum g_i^2 / (sqrt(v_hat_i) + eps)`. Adam moments must already
/// include `grad`.
pub fn search_quantities(
    kind: DirectionKind,
    adam: Option<&AdamState>,
    grad: &ParamVector,
) -> Result<(ParamVector, f64)> {
    match (kind, adam) {
        (DirectionKind::Sgd, _) => Ok((sgd_direction(grad), norm_sq(grad))),
        (DirectionKind::Adam, Some(state)) => Ok((
            adam_direction(state, grad, false)?,
            preconditioned_grad_norm(state, grad)?,
        )),
        (DirectionKind::Adam, None) => Err(Error::MomentsNotInitialized),
    }
}

/// Direction actually applied to the parameters: `-g` for SGD, the
/// momentum-corrected Adam direction otherwise.
pub fn update_direction(kind: DirectionKind, adam: Option<&AdamState>, grad: &ParamVector) -> Result<ParamVector> {
    match (kind, adam) {
        (DirectionKind::Sgd, _) => Ok(sgd_direction(grad)),
        (DirectionKind::Adam, Some(state)) => adam_direction(state, grad, true),
        (DirectionKind::Adam, None) => Err(Error::MomentsNotInitialized),
    }
}

/// Mutable state of an SLS run.
#[derive(Debug, Clone, PartialEq)]
pub struct SlsState {
    pub eta: f64,
    pub adam: Option<AdamState>,
}

impl SlsState {
    pub fn new(kind: DirectionKind, dim: usize, eta_init: f64, adam: AdamParams) -> Self {
        Self {
            eta: eta_init,
            adam: (kind == DirectionKind::Adam).then(|| AdamState::new(dim, adam)),
        }
    }
}

/// One SLS iteration that always searches (unless the gradient is tiny).
pub fn sls_step(
    problem: &dyn Problem,
    w: &ParamVector,
    batch: &Batch,
    k: u64,
    kind: DirectionKind,
    state: &mut SlsState,
    cfg: &SlsConfig,
) -> Result<StepOutcome> {
    sls_step_inner(problem, w, batch, k, kind, state, cfg, true)
}

#[allow(clippy::too_many_arguments)]
fn sls_step_inner(
    problem: &dyn Problem,
    w: &ParamVector,
    batch: &Batch,
    k: u64,
    kind: DirectionKind,
    state: &mut SlsState,
    cfg: &SlsConfig,
    search: bool,
) -> Result<StepOutcome> {
    let eval = problem.loss_grad(w, &batch.indices)?;
    if let Some(adam) = state.adam.as_mut() {
        adam.update_moments(&eval.grad)?;
    }
    let grad_norm_sq = norm_sq(&eval.grad);

    if !search || cfg.search.gradient_is_tiny(grad_norm_sq) {
        let d = update_direction(kind, state.adam.as_ref(), &eval.grad)?;
        return Ok(StepOutcome {
            w_next: axpy(state.eta, &d, w)?,
            record: StepRecord::unsearched(k, state.eta, eval.loss, grad_norm_sq, batch.seed),
            search_direction: None,
        });
    }

    let (d_search, gnorm_term) = search_quantities(kind, state.adam.as_ref(), &eval.grad)?;
    let eta_start = propose_initial_step(state.eta, cfg.search.b, cfg.search.eta_max);
    let out = backtrack(
        |trial| problem.loss(trial, &batch.indices),
        w,
        &d_search,
        eta_start,
        eval.loss,
        gnorm_term,
        cfg.c,
        &cfg.search,
    )?;
    state.eta = out.eta;

    let d_update = match kind {
        DirectionKind::Sgd => d_search.clone(),
        DirectionKind::Adam => update_direction(kind, state.adam.as_ref(), &eval.grad)?,
    };
    Ok(StepOutcome {
        w_next: axpy(out.eta, &d_update, w)?,
        record: StepRecord {
            k,
            eta: out.eta,
            loss: eval.loss,
            grad_norm_sq,
            searched: true,
            backtracks: out.backtracks,
            batch_seed: batch.seed,
            check: Some(CriterionCheck {
                criterion: Criterion::Armijo { c: cfg.c, gnorm_term },
                loss_trial: out.loss_trial,
                accepted: out.accepted,
            }),
        },
        search_direction: Some(d_search),
    })
}

/// SGD or Adam driven by the stochastic Armijo line search.
#[derive(Debug, Clone)]
pub struct Sls {
    kind: DirectionKind,
    cfg: SlsConfig,
    state: SlsState,
    freq: Option<FreqState>,
}

impl Sls {
    pub fn new(kind: DirectionKind, cfg: SlsConfig, dim: usize) -> Self {
        Self::with_adam_params(kind, cfg, dim, AdamParams::default())
    }

    pub fn with_adam_params(kind: DirectionKind, cfg: SlsConfig, dim: usize, adam: AdamParams) -> Self {
        Self {
            kind,
            cfg,
            state: SlsState::new(kind, dim, cfg.search.eta_init, adam),
            freq: None,
        }
    }

    /// Enables the line-search frequency controller.
    pub fn with_frequency_control(mut self) -> Self {
        self.freq = Some(FreqState::new());
        self
    }

    pub fn state(&self) -> &SlsState {
        &self.state
    }
}

impl Optimizer for Sls {
    fn name(&self) -> String {
        format!("{}_sls", self.kind.as_str())
    }

    fn current_eta(&self) -> f64 {
        self.state.eta
    }

    fn step(&mut self, problem: &dyn Problem, w: &ParamVector, batch: &Batch, k: u64) -> Result<StepOutcome> {
        let search = self.freq.as_ref().is_none_or(FreqState::should_search);
        let out = sls_step_inner(problem, w, batch, k, self.kind, &mut self.state, &self.cfg, search)?;
        if let Some(freq) = self.freq.as_mut() {
            freq.record_step(out.record.searched, out.record.eta);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Quadratic;

    fn half_square(w: &ParamVector) -> f64 {
        0.5 * w[0] * w[0]
    }

    #[test]
    fn initial_step_growth() {
        assert_eq!(propose_initial_step(1.0, 1.0, 10.0), 2.0);
        let grown = propose_initial_step(1.0, 500.0, 10.0);
        assert!((grown - 1.001_387_255_711).abs() < 1e-12);
        assert_eq!(propose_initial_step(10.0, 500.0, 10.0), 10.0);
    }

    #[test]
    fn armijo_examples() {
        assert!(armijo_holds(1.0, 0.9, 1.0, 0.1, 0.5));
        assert!(!armijo_holds(1.0, 0.96, 1.0, 0.1, 0.5));
        assert!(armijo_holds(1.0, 1.0, 3.0, 0.1, 0.0));
        assert!(!armijo_holds(1.0, f64::NAN, 1.0, 0.1, 0.0));
    }

    #[test]
    fn accepts_full_step_on_quadratic() {
        let w: ParamVector = vec![1.0].into();
        let d: ParamVector = vec![-1.0].into();
        let p = SearchParams::default();
        let out = backtrack(half_square, &w, &d, 1.0, 0.5, 1.0, 0.1, &p).unwrap();
        assert_eq!(out.eta, 1.0);
        assert_eq!(out.backtracks, 0);
        assert_eq!(out.loss_trial, 0.0);
        assert!(out.accepted);
    }

    #[test]
    fn shrink_sequence_matches_reference_loop() {
        let w: ParamVector = vec![1.0].into();
        let d: ParamVector = vec![-1.0].into();
        let p = SearchParams::default();
        let mut evals = 0;
        let out = backtrack(
            |x| {
                evals += 1;
                half_square(x)
            },
            &w,
            &d,
            8.0,
            0.5,
            1.0,
            0.1,
            &p,
        )
        .unwrap();

        // Reference: multiply by delta until 0.5 (1 - eta)^2 <= 0.5 - 0.1 eta.
        let mut eta = 8.0f64;
        let mut count = 0;
        while !(0.5 * (1.0 - eta).powi(2) <= 0.5 - 0.1 * eta) {
            eta *= 0.9;
            count += 1;
        }
        assert_eq!(out.backtracks, count);
        assert_eq!(out.eta, eta);
        assert_eq!(evals, count as usize + 1);
        assert!(out.eta <= 1.8);
    }

    #[test]
    fn zero_gnorm_only_requires_non_increase() {
        let w: ParamVector = vec![1.0].into();
        let d: ParamVector = vec![-0.5].into();
        let out = backtrack(half_square, &w, &d, 3.0, 0.5, 0.0, 0.1, &SearchParams::default()).unwrap();
        assert_eq!(out.backtracks, 0);
    }

    #[test]
    fn non_finite_trials_keep_shrinking() {
        let w: ParamVector = vec![0.0].into();
        let d: ParamVector = vec![1.0].into();
        let f = |x: &ParamVector| if x[0] > 0.5 { f64::INFINITY } else { -x[0] };
        let out = backtrack(f, &w, &d, 1.0, 0.0, 1.0, 0.1, &SearchParams::default()).unwrap();
        assert!(out.accepted);
        assert!(out.eta <= 0.5);
        assert_eq!(out.backtracks, 7);
    }

    #[test]
    fn give_up_returns_last_trial() {
        let w: ParamVector = vec![0.0].into();
        let d: ParamVector = vec![1.0].into();
        let p = SearchParams {
            max_backtracks: 5,
            ..Default::default()
        };
        let mut evals = 0;
        let out = backtrack(
            |_| {
                evals += 1;
                1.0
            },
            &w,
            &d,
            1.0,
            0.0,
            1.0,
            0.1,
            &p,
        )
        .unwrap();
        assert!(!out.accepted);
        assert_eq!(out.backtracks, 5);
        assert_eq!(evals, 6);
        assert!((out.eta - 0.9f64.powi(5)).abs() < 1e-15);
    }

    #[test]
    fn give_up_never_goes_below_eta_min() {
        let p = SearchParams {
            eta_min: 0.5,
            ..Default::default()
        };
        let out = shrink_search(1.0, &p, |_| (1.0, false));
        assert_eq!(out.eta, 0.5);
        assert!(!out.accepted);
        assert_eq!(out.backtracks, 7);
    }

    #[test]
    fn zero_gradient_batch_skips_search() {
        let problem = Quadratic::from_parts(vec![1.0], vec![2.0]);
        let w: ParamVector = vec![2.0].into();
        let mut state = SlsState::new(DirectionKind::Sgd, 1, 1.0, AdamParams::default());
        let out = sls_step(
            &problem,
            &w,
            &Batch::full(1),
            1,
            DirectionKind::Sgd,
            &mut state,
            &SlsConfig::default(),
        )
        .unwrap();
        assert!(!out.record.searched);
        assert_eq!(out.record.backtracks, 0);
        assert_eq!(out.w_next, w);
        assert_eq!(state.eta, 1.0);
    }

    #[test]
    fn sgd_sls_converges_on_one_dim_quadratic() {
        let problem = Quadratic::from_parts(vec![1.0], vec![0.0]);
        let mut w: ParamVector = vec![10.0].into();
        let cfg = SlsConfig::default();
        let mut state = SlsState::new(DirectionKind::Sgd, 1, cfg.search.eta_init, AdamParams::default());
        for k in 1..=50 {
            let out = sls_step(&problem, &w, &Batch::full(1), k, DirectionKind::Sgd, &mut state, &cfg).unwrap();
            w = out.w_next;
        }
        assert!(w[0].abs() <= 1e-4, "w = {}", w[0]);
    }

    #[test]
    fn adam_with_unit_preconditioner_matches_sgd() {
        let problem = Quadratic::from_parts(vec![1.0, 4.0], vec![0.0, 0.0]);
        let w: ParamVector = vec![1.5, -0.5].into();
        let batch = Batch::full(1);
        let eval = problem.loss_grad(&w, &batch.indices).unwrap();

        // v_hat == 1 exactly with beta2 = 0.5, k = 1, v = 0.5.
        let adam = AdamState {
            m: ParamVector::zeros(2),
            v: ParamVector::filled(2, 0.5),
            k: 1,
            params: AdamParams {
                beta1: 0.9,
                beta2: 0.5,
                epsilon: 0.0,
            },
        };
        let (d_adam, g_adam) = search_quantities(DirectionKind::Adam, Some(&adam), &eval.grad).unwrap();
        let (d_sgd, g_sgd) = search_quantities(DirectionKind::Sgd, None, &eval.grad).unwrap();
        assert_eq!(d_adam, d_sgd);
        assert_eq!(g_adam, g_sgd);

        let p = SearchParams::default();
        let f = |x: &ParamVector| problem.loss(x, &batch.indices);
        let a = backtrack(f, &w, &d_adam, 1.0, eval.loss, g_adam, 0.1, &p).unwrap();
        let b = backtrack(f, &w, &d_sgd, 1.0, eval.loss, g_sgd, 0.1, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(SlsConfig::default().validate().is_ok());
        let bad = SlsConfig {
            c: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SlsConfig {
            search: SearchParams {
                eta_init: 20.0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
