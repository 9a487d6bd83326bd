//! Multi-seed runs and their summaries.

use rayon::prelude::*;
use salsa_core::train::{StepView, Trainer};
use salsa_core::{ParamVector, Problem, TrainingTrace};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OptimizerSpec};
use crate::error::Result;
use crate::stats;

/// EMA factor applied to the per-step training loss for the reported final loss.
pub const FINAL_LOSS_SMOOTHING: f64 = 0.99;

/// Everything one seed produces.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub trace: TrainingTrace,
    pub final_w: ParamVector,
    /// Best held-out accuracy over the per-epoch evaluations.
    pub peak_validation: Option<f64>,
    /// `(h, s)` after every step, for optimizers that smooth.
    pub smoothing: Vec<(f64, f64)>,
}

/// The shared pieces of a single run, independent of the config file layout.
#[derive(Debug, Clone, Copy)]
pub struct RunSpec<'a> {
    pub optimizer: &'a OptimizerSpec,
    pub epochs: u64,
    pub batch_size: usize,
    pub frequency_controller: bool,
}

pub fn run_seed(problem: &dyn Problem, spec: RunSpec<'_>, seed: u64, snapshot: &serde_json::Value) -> Result<SeedRun> {
    let trainer = Trainer::new(problem, spec.batch_size, seed).with_config(snapshot.clone());
    let per_epoch = trainer.steps_per_epoch();
    let steps = spec.epochs * per_epoch;
    let mut optimizer = spec.optimizer.build(problem.dim(), steps, spec.frequency_controller)?;
    let mut peak: Option<f64> = None;
    let mut smoothing = Vec::new();
    let result = trainer.run_from(
        optimizer.as_mut(),
        problem.initial_point(seed),
        steps,
        |view: &StepView<'_>| {
            if let Some(state) = view.optimizer.smooth_state() {
                smoothing.push((state.h, state.s));
            }
            if view.outcome.record.k % per_epoch == 0 {
                if let Some(acc) = problem.validation_accuracy(&view.outcome.w_next) {
                    peak = Some(peak.map_or(acc, |p| p.max(acc)));
                }
            }
        },
    )?;
    log::debug!(
        "{} seed {seed}: {steps} steps, final loss {:.6e}",
        result.trace.metadata.optimizer,
        result.trace.smoothed_final_loss(FINAL_LOSS_SMOOTHING)
    );
    Ok(SeedRun {
        seed,
        trace: result.trace,
        final_w: result.final_w,
        peak_validation: peak,
        smoothing,
    })
}

/// Runs every seed in parallel; results come back in seed order.
pub fn run_seeds(
    problem: &dyn Problem,
    spec: RunSpec<'_>,
    seeds: &[u64],
    snapshot: &serde_json::Value,
) -> Result<Vec<SeedRun>> {
    seeds
        .par_iter()
        .map(|&seed| run_seed(problem, spec, seed, snapshot))
        .collect()
}

/// Builds the problem, validates the config and runs all seeds.
pub fn run_experiment_detailed(cfg: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    let problem = cfg.problem.build()?;
    cfg.validate(problem.as_ref())?;
    let spec = RunSpec {
        optimizer: &cfg.optimizer,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        frequency_controller: cfg.frequency_controller,
    };
    run_seeds(problem.as_ref(), spec, &cfg.seeds, &cfg.snapshot())
}

/// One trace per seed, in config seed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrainingTrace>> {
    Ok(run_experiment_detailed(cfg)?.into_iter().map(|r| r.trace).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub optimizer: String,
    pub problem: String,
    pub per_seed_final_loss: Vec<f64>,
    pub mean_final_loss: f64,
    /// Mean over seeds of the peak per-epoch validation accuracy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_validation: Option<f64>,
    /// Filled in by `compare`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rank: Option<f64>,
}

impl RunSummary {
    pub fn from_runs(runs: &[SeedRun]) -> Self {
        let first = &runs[0].trace.metadata;
        let losses: Vec<f64> = runs
            .iter()
            .map(|r| r.trace.smoothed_final_loss(FINAL_LOSS_SMOOTHING))
            .collect();
        let peaks: Option<Vec<f64>> = runs.iter().map(|r| r.peak_validation).collect();
        Self {
            optimizer: first.optimizer.clone(),
            problem: first.problem.clone(),
            mean_final_loss: stats::mean(&losses),
            per_seed_final_loss: losses,
            peak_validation: peaks.map(|p| stats::mean(&p)),
            mean_rank: None,
        }
    }
}
