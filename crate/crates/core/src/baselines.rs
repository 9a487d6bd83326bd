//! Fixed learning-rate SGD and Adam with an optional warmup + cosine schedule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::directions::{adam_direction, sgd_direction, AdamParams, AdamState, DirectionKind};
use crate::error::{Error, Result};
use crate::optimizer::{Batch, Optimizer, StepOutcome};
use crate::problems::Problem;
use crate::trace::StepRecord;
use crate::vector::{axpy, norm_sq, ParamVector};

/// Peak rates reported as tuned for the large-scale tasks. Desk-scale
/// problems need their own grid.
pub mod presets {
    pub const ADAM_NLP: f64 = 2e-5;
    pub const SGD_NLP: f64 = 2e-3;
    pub const ADAM_IMAGE: f64 = 1e-3;
    pub const SGD_IMAGE: f64 = 1e-1;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleShape {
    CosineWarmup,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub peak_lr: f64,
    pub total_steps: u64,
    #[serde(default = "default_warm_frac")]
    pub warm_frac: f64,
    pub shape: ScheduleShape,
}

fn default_warm_frac() -> f64 {
    0.1
}

impl ScheduleConfig {
    pub fn flat(peak_lr: f64, total_steps: u64) -> Self {
        Self {
            peak_lr,
            total_steps,
            warm_frac: default_warm_frac(),
            shape: ScheduleShape::Flat,
        }
    }

    pub fn cosine_warmup(peak_lr: f64, total_steps: u64) -> Self {
        Self {
            peak_lr,
            total_steps,
            warm_frac: default_warm_frac(),
            shape: ScheduleShape::CosineWarmup,
        }
    }

    pub fn warmup_steps(&self) -> u64 {
        (self.warm_frac * self.total_steps as f64).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr > 0.0) {
            return Err(Error::InvalidConfig("peak_lr must be positive".into()));
        }
        if self.total_steps == 0 {
            return Err(Error::InvalidConfig("total_steps must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.warm_frac) {
            return Err(Error::InvalidConfig("warm_frac must lie in [0, 1)".into()));
        }
        if self.shape == ScheduleShape::CosineWarmup {
            let warm = self.warmup_steps();
            if self.warm_frac * (self.total_steps as f64) < 1.0 || warm >= self.total_steps {
                return Err(Error::InvalidConfig(format!(
                    "cosine warmup needs 1 <= warmup steps < total steps (got {warm} of {})",
                    self.total_steps
                )));
            }
        }
        Ok(())
    }
}

/// Learning rate at step `k` in `[0, total_steps)`.
///
/// The warmup ramp is `peak * (k + 1) / warm`, reaching the peak on the last
/// warmup step; from `k = warm` the rate follows
/// `peak * (1 + cos(pi * (k - warm) / (total - warm))) / 2`.
pub fn schedule_lr(cfg: &ScheduleConfig, k: u64) -> Result<f64> {
    if k >= cfg.total_steps {
        return Err(Error::StepOutOfRange {
            k,
            total: cfg.total_steps,
        });
    }
    match cfg.shape {
        ScheduleShape::Flat => Ok(cfg.peak_lr),
        ScheduleShape::CosineWarmup => {
            let warm = cfg.warmup_steps().max(1);
            if k < warm {
                return Ok(cfg.peak_lr * (k + 1) as f64 / warm as f64);
            }
            let p = (k - warm) as f64 / (cfg.total_steps - warm) as f64;
            Ok(cfg.peak_lr * 0.5 * (1.0 + (PI * p).cos()))
        }
    }
}

/// `w - lr * grad`.
pub fn fixed_sgd_step(problem: &dyn Problem, w: &ParamVector, batch: &Batch, k: u64, lr: f64) -> Result<StepOutcome> {
    let eval = problem.loss_grad(w, &batch.indices)?;
    Ok(StepOutcome {
        w_next: axpy(lr, &sgd_direction(&eval.grad), w)?,
        record: StepRecord::unsearched(k, lr, eval.loss, norm_sq(&eval.grad), batch.seed),
        search_direction: None,
    })
}

/// Adam update with a given learning rate.
pub fn fixed_adam_step(
    problem: &dyn Problem,
    w: &ParamVector,
    batch: &Batch,
    k: u64,
    adam: &mut AdamState,
    lr: f64,
) -> Result<StepOutcome> {
    let eval = problem.loss_grad(w, &batch.indices)?;
    adam.update_moments(&eval.grad)?;
    let d = adam_direction(adam, &eval.grad, true)?;
    Ok(StepOutcome {
        w_next: axpy(lr, &d, w)?,
        record: StepRecord::unsearched(k, lr, eval.loss, norm_sq(&eval.grad), batch.seed),
        search_direction: None,
    })
}

/// Baseline optimizer following a learning-rate schedule. Step `k` (1-based,
/// as produced by the trainer) uses schedule index `k - 1`.
#[derive(Debug, Clone)]
pub struct FixedLr {
    kind: DirectionKind,
    schedule: ScheduleConfig,
    adam: Option<AdamState>,
    steps_taken: u64,
}

impl FixedLr {
    pub fn new(kind: DirectionKind, schedule: ScheduleConfig, dim: usize) -> Self {
        Self::with_adam_params(kind, schedule, dim, AdamParams::default())
    }

    pub fn with_adam_params(kind: DirectionKind, schedule: ScheduleConfig, dim: usize, adam: AdamParams) -> Self {
        Self {
            kind,
            schedule,
            adam: (kind == DirectionKind::Adam).then(|| AdamState::new(dim, adam)),
            steps_taken: 0,
        }
    }
}

impl Optimizer for FixedLr {
    fn name(&self) -> String {
        self.kind.as_str().to_string()
    }

    fn current_eta(&self) -> f64 {
        let k = self.steps_taken.min(self.schedule.total_steps.saturating_sub(1));
        schedule_lr(&self.schedule, k).unwrap_or(self.schedule.peak_lr)
    }

    fn step(&mut self, problem: &dyn Problem, w: &ParamVector, batch: &Batch, k: u64) -> Result<StepOutcome> {
        let lr = schedule_lr(&self.schedule, self.steps_taken)?;
        self.steps_taken += 1;
        match self.adam.as_mut() {
            Some(adam) => fixed_adam_step(problem, w, batch, k, adam, lr),
            None => fixed_sgd_step(problem, w, batch, k, lr),
        }
    }
}
