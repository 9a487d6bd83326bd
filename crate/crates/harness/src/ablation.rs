//! Paired runs with and without the line-search frequency controller.

use salsa_core::Problem;
use serde::{Deserialize, Serialize};

use crate::config::OptimizerSpec;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_seeds, RunSpec, SeedRun, FINAL_LOSS_SMOOTHING};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub frequency_controller: bool,
    pub final_losses: Vec<f64>,
    pub mean_final_loss: f64,
    /// Fraction of steps that ran a line search, averaged over seeds.
    pub searched_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub optimizer: String,
    pub problem: String,
    pub seeds: Vec<u64>,
    pub with_controller: AblationArm,
    pub without_controller: AblationArm,
    /// `mean(with) - mean(without)`.
    pub final_loss_delta: f64,
    pub pooled_standard_error: f64,
}

impl AblationReport {
    /// `|delta|` in units of the pooled standard error.
    pub fn delta_in_standard_errors(&self) -> f64 {
        self.final_loss_delta.abs() / self.pooled_standard_error
    }
}

fn arm(runs: &[SeedRun], frequency_controller: bool) -> AblationArm {
    let final_losses: Vec<f64> = runs
        .iter()
        .map(|r| r.trace.smoothed_final_loss(FINAL_LOSS_SMOOTHING))
        .collect();
    let fractions: Vec<f64> = runs.iter().map(|r| r.trace.searched_fraction()).collect();
    AblationArm {
        frequency_controller,
        mean_final_loss: stats::mean(&final_losses),
        final_losses,
        searched_fraction: stats::mean(&fractions),
    }
}

/// Both arms see identical batch streams because batches depend only on the seed.
pub fn frequency_ablation(
    problem: &dyn Problem,
    optimizer: &OptimizerSpec,
    seeds: &[u64],
    epochs: u64,
    batch_size: usize,
) -> Result<AblationReport> {
    if seeds.is_empty() {
        return Err(HarnessError::Config("at least one seed is required".into()));
    }
    if !optimizer.kind.uses_line_search() {
        return Err(HarnessError::Config(
            "the frequency controller needs a line-search optimizer".into(),
        ));
    }
    let snapshot = serde_json::json!({ "optimizer": optimizer, "epochs": epochs, "batch_size": batch_size });
    let spec = |frequency_controller| RunSpec {
        optimizer,
        epochs,
        batch_size,
        frequency_controller,
    };
    let with = run_seeds(problem, spec(true), seeds, &snapshot)?;
    let without = run_seeds(problem, spec(false), seeds, &snapshot)?;
    let (with, without) = (arm(&with, true), arm(&without, false));
    Ok(AblationReport {
        optimizer: optimizer.label(),
        problem: problem.name().to_string(),
        seeds: seeds.to_vec(),
        final_loss_delta: with.mean_final_loss - without.mean_final_loss,
        pooled_standard_error: stats::pooled_standard_error(&with.final_losses, &without.final_losses),
        with_controller: with,
        without_controller: without,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OptimizerKind;
    use salsa_core::problems::Quadratic;

    #[test]
    fn controller_off_searches_every_step() {
        let problem = Quadratic::new(3, 5.0, 1);
        let spec = OptimizerSpec::new(OptimizerKind::SgdSalsa);
        let report = frequency_ablation(&problem, &spec, &[1, 2], 40, 1).unwrap();
        assert_eq!(report.without_controller.searched_fraction, 1.0);
        assert!(report.with_controller.searched_fraction < 1.0);
        assert_eq!(report.optimizer, "sgd_salsa");
    }

    #[test]
    fn fixed_lr_is_rejected() {
        let problem = Quadratic::new(3, 5.0, 1);
        let spec = OptimizerSpec::new(OptimizerKind::Adam);
        assert!(frequency_ablation(&problem, &spec, &[1], 1, 1).is_err());
    }
}
