//! Stable Armijo line search adaptation (SaLSa).
//!
//! Instead of testing the raw Armijo inequality on every mini-batch, both of
//! its batch-dependent sides are smoothed with an exponential moving average:
//!
//! ```text
//! h_k = beta3 h_{k-1} + (1 - beta3) (f_k(w_k) - f_k(w_k + eta_k d_k))
//! s_k = beta3 s_{k-1} + (1 - beta3) ||grad f_k(w_k)||^2      (SGD)
//! s_k = beta3 s_{k-1} + (1 - beta3) sum g_i^2 / (sqrt(v_hat_i) + eps)   (Adam)
//! ```
//!
//! and a step size is accepted once `h_k >= c eta_k s_k`. The gradient side
//! does not depend on `eta`, so `s_k` is committed before backtracking; `h_k`
//! is recomputed for every candidate and only the accepted value is kept.
//! Both averages are seeded with their first observation and frozen on steps
//! without a search.

use serde::{Deserialize, Serialize};

use crate::directions::{AdamParams, AdamState, DirectionKind};
use crate::error::{Error, Result};
use crate::frequency::FreqState;
use crate::line_search::{propose_initial_step, search_quantities, shrink_search, update_direction, SearchParams};
use crate::optimizer::{Batch, Optimizer, StepOutcome};
use crate::problems::Problem;
use crate::trace::{Criterion, CriterionCheck, StepRecord};
use crate::vector::{axpy, norm_sq, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SalsaConfig {
    pub c: f64,
    pub beta3: f64,
    /// Additionally shrink until the step does not increase the batch loss.
    pub enforce_nondecrease: bool,
    #[serde(flatten)]
    pub search: SearchParams,
}

impl Default for SalsaConfig {
    fn default() -> Self {
        Self {
            c: 0.3,
            beta3: 0.99,
            enforce_nondecrease: false,
            search: SearchParams::default(),
        }
    }
}

impl SalsaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::InvalidConfig("c must lie in (0, 1)".into()));
        }
        if !(self.beta3 > 0.0 && self.beta3 < 1.0) {
            return Err(Error::InvalidConfig("beta3 must lie in (0, 1)".into()));
        }
        self.search.validate()
    }
}

/// Smoothed loss decrease `h` and gradient-norm term `s`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SmoothState {
    pub h: f64,
    pub s: f64,
    pub initialized: bool,
}

/// One EMA step; the first observation seeds the average.
pub fn smooth_update(prev: f64, x: f64, beta3: f64, initialized: bool) -> f64 {
    if initialized {
        beta3 * prev + (1.0 - beta3) * x
    } else {
        x
    }
}

/// `h >= c * eta * s`.
pub fn salsa_criterion(h: f64, s: f64, eta: f64, c: f64) -> bool {
    h >= c * eta * s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalsaBacktrack {
    pub eta: f64,
    pub backtracks: u32,
    /// Trial `h` of the returned candidate; the value to commit.
    pub h: f64,
    pub loss_trial: f64,
    pub accepted: bool,
}

/// Backtracking on the smoothed criterion.
///
/// `s_new` is this step's already-smoothed gradient term. Each candidate gets
/// its own trial `h` from `smooth.h` and the candidate's loss decrease; a NaN
/// trial loss makes the trial `h` NaN, which fails the criterion.
#[allow(clippy::too_many_arguments)]
pub fn salsa_backtrack(
    mut objective: impl FnMut(&ParamVector) -> f64,
    w: &ParamVector,
    d: &ParamVector,
    eta_start: f64,
    loss0: f64,
    smooth: &SmoothState,
    s_new: f64,
    c: f64,
    beta3: f64,
    params: &SearchParams,
) -> Result<SalsaBacktrack> {
    if w.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: d.dim(),
        });
    }
    let trial_h = |loss: f64| smooth_update(smooth.h, loss0 - loss, beta3, smooth.initialized);
    let out = shrink_search(eta_start, params, |eta| {
        let loss = objective(&axpy(eta, d, w).expect("dimensions checked"));
        (loss, salsa_criterion(trial_h(loss), s_new, eta, c))
    });
    Ok(SalsaBacktrack {
        eta: out.eta,
        backtracks: out.backtracks,
        h: trial_h(out.loss_trial),
        loss_trial: out.loss_trial,
        accepted: out.accepted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonDecrease {
    pub eta: f64,
    /// Number of extra shrinks applied (0 when `eta` was already fine).
    pub shrinks: u32,
    /// Batch loss at the returned step size.
    pub loss_trial: f64,
    pub satisfied: bool,
}

/// Largest `eta * delta^j` whose trial loss does not exceed `loss0`.
///
/// Falls back to `eta_min` when the budget is exhausted.
pub fn enforce_nondecrease(
    mut objective: impl FnMut(&ParamVector) -> f64,
    w: &ParamVector,
    d: &ParamVector,
    eta: f64,
    loss0: f64,
    params: &SearchParams,
) -> Result<NonDecrease> {
    if w.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: d.dim(),
        });
    }
    let mut eval = |eta: f64| objective(&axpy(eta, d, w).expect("dimensions checked"));
    let out = shrink_search(eta, params, |eta| {
        let loss = eval(eta);
        (loss, loss <= loss0)
    });
    if out.accepted {
        return Ok(NonDecrease {
            eta: out.eta,
            shrinks: out.backtracks,
            loss_trial: out.loss_trial,
            satisfied: true,
        });
    }
    let loss_trial = if out.eta == params.eta_min {
        out.loss_trial
    } else {
        eval(params.eta_min)
    };
    Ok(NonDecrease {
        eta: params.eta_min,
        shrinks: out.backtracks,
        loss_trial,
        satisfied: loss_trial <= loss0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SalsaState {
    pub eta: f64,
    pub smooth: SmoothState,
    pub adam: Option<AdamState>,
}

impl SalsaState {
    pub fn new(kind: DirectionKind, dim: usize, eta_init: f64, adam: AdamParams) -> Self {
        Self {
            eta: eta_init,
            smooth: SmoothState::default(),
            adam: (kind == DirectionKind::Adam).then(|| AdamState::new(dim, adam)),
        }
    }
}

/// SaLSa step with the SGD direction.
pub fn salsa_sgd_step(
    problem: &dyn Problem,
    w: &ParamVector,
    batch: &Batch,
    k: u64,
    state: &mut SalsaState,
    cfg: &SalsaConfig,
) -> Result<StepOutcome> {
    salsa_step_inner(problem, w, batch, k, DirectionKind::Sgd, state, cfg, true)
}

/// SaLSa step with the Adam direction: the search probes the momentum-free
/// preconditioned direction, the update uses momentum.
pub fn salsa_adam_step(
    problem: &dyn Problem,
    w: &ParamVector,
    batch: &Batch,
    k: u64,
    state: &mut SalsaState,
    cfg: &SalsaConfig,
) -> Result<StepOutcome> {
    if state.adam.is_none() {
        return Err(Error::InvalidConfig("adam step requires adam moments".into()));
    }
    salsa_step_inner(problem, w, batch, k, DirectionKind::Adam, state, cfg, true)
}

#[allow(clippy::too_many_arguments)]
fn salsa_step_inner(
    problem: &dyn Problem,
    w: &ParamVector,
    batch: &Batch,
    k: u64,
    kind: DirectionKind,
    state: &mut SalsaState,
    cfg: &SalsaConfig,
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
    let prev = state.smooth;
    let s_new = smooth_update(prev.s, gnorm_term, cfg.beta3, prev.initialized);
    let objective = |trial: &ParamVector| problem.loss(trial, &batch.indices);

    let eta_start = propose_initial_step(state.eta, cfg.search.b, cfg.search.eta_max);
    let bt = salsa_backtrack(
        objective,
        w,
        &d_search,
        eta_start,
        eval.loss,
        &prev,
        s_new,
        cfg.c,
        cfg.beta3,
        &cfg.search,
    )?;
    let (mut eta, mut h, mut loss_trial) = (bt.eta, bt.h, bt.loss_trial);
    let mut backtracks = bt.backtracks;
    let mut accepted = bt.accepted;

    if cfg.enforce_nondecrease {
        let nd = enforce_nondecrease(objective, w, &d_search, eta, eval.loss, &cfg.search)?;
        if nd.eta != eta || nd.loss_trial != loss_trial {
            eta = nd.eta;
            loss_trial = nd.loss_trial;
            h = smooth_update(prev.h, eval.loss - loss_trial, cfg.beta3, prev.initialized);
        }
        backtracks += nd.shrinks;
        accepted &= nd.satisfied;
    }

    state.eta = eta;
    state.smooth = SmoothState {
        h,
        s: s_new,
        initialized: true,
    };

    let d_update = match kind {
        DirectionKind::Sgd => d_search.clone(),
        DirectionKind::Adam => update_direction(kind, state.adam.as_ref(), &eval.grad)?,
    };
    Ok(StepOutcome {
        w_next: axpy(eta, &d_update, w)?,
        record: StepRecord {
            k,
            eta,
            loss: eval.loss,
            grad_norm_sq,
            searched: true,
            backtracks,
            batch_seed: batch.seed,
            check: Some(CriterionCheck {
                criterion: Criterion::Salsa {
                    c: cfg.c,
                    beta3: cfg.beta3,
                    h_prev: prev.initialized.then_some(prev.h),
                    s: s_new,
                },
                loss_trial,
                accepted,
            }),
        },
        search_direction: Some(d_search),
    })
}

/// SGD or Adam driven by the smoothed Armijo line search.
#[derive(Debug, Clone)]
pub struct Salsa {
    kind: DirectionKind,
    cfg: SalsaConfig,
    state: SalsaState,
    freq: Option<FreqState>,
}

impl Salsa {
    pub fn new(kind: DirectionKind, cfg: SalsaConfig, dim: usize) -> Self {
        Self::with_adam_params(kind, cfg, dim, AdamParams::default())
    }

    pub fn with_adam_params(kind: DirectionKind, cfg: SalsaConfig, dim: usize, adam: AdamParams) -> Self {
        Self {
            kind,
            cfg,
            state: SalsaState::new(kind, dim, cfg.search.eta_init, adam),
            freq: None,
        }
    }

    pub fn with_frequency_control(mut self) -> Self {
        self.freq = Some(FreqState::new());
        self
    }

    pub fn state(&self) -> &SalsaState {
        &self.state
    }

    pub fn frequency(&self) -> Option<&FreqState> {
        self.freq.as_ref()
    }
}

impl Optimizer for Salsa {
    fn name(&self) -> String {
        format!("{}_salsa", self.kind.as_str())
    }

    fn current_eta(&self) -> f64 {
        self.state.eta
    }

    fn smooth_state(&self) -> Option<SmoothState> {
        Some(self.state.smooth)
    }

    fn step(&mut self, problem: &dyn Problem, w: &ParamVector, batch: &Batch, k: u64) -> Result<StepOutcome> {
        let search = self.freq.as_ref().is_none_or(FreqState::should_search);
        let out = salsa_step_inner(problem, w, batch, k, self.kind, &mut self.state, &self.cfg, search)?;
        if let Some(freq) = self.freq.as_mut() {
            freq.record_step(out.record.searched, out.record.eta);
        }
        Ok(out)
    }
}
