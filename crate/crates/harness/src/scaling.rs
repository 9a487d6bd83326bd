//! How the accepted step size grows with the batch size.

use salsa_core::Problem;
use serde::{Deserialize, Serialize};

use crate::config::OptimizerSpec;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_seeds, RunSpec, SeedRun};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub batch_size: usize,
    pub per_seed_mid_eta: Vec<f64>,
    pub mean_mid_eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRatio {
    pub from: usize,
    pub to: usize,
    pub ratio: f64,
}

/// Per-step smoothed loss decrease `h` and gradient term `s` of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSeries {
    pub batch_size: usize,
    pub seed: u64,
    pub h: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub optimizer: String,
    pub problem: String,
    pub rows: Vec<BatchRow>,
    pub ratios: Vec<StepRatio>,
    pub series: Vec<SmoothingSeries>,
}

/// Mean step size over the middle third of the steps (record 0 excluded).
pub fn mid_training_eta(run: &SeedRun) -> f64 {
    let steps = &run.trace.records[1..];
    let (lo, hi) = (steps.len() / 3, (2 * steps.len()).div_ceil(3));
    let window = &steps[lo..hi.max(lo + 1).min(steps.len())];
    stats::mean(&window.iter().map(|r| r.eta).collect::<Vec<_>>())
}

/// Runs every batch size for the same number of epochs and reports the
/// mid-training step size and its ratio across consecutive batch sizes.
pub fn batch_scaling_experiment(
    problem: &dyn Problem,
    optimizer: &OptimizerSpec,
    batch_sizes: &[usize],
    seeds: &[u64],
    epochs: u64,
) -> Result<ScalingReport> {
    if batch_sizes.is_empty() || seeds.is_empty() || epochs == 0 {
        return Err(HarnessError::Config(
            "scaling needs batch sizes, seeds and at least one epoch".into(),
        ));
    }
    let snapshot = serde_json::json!({
        "optimizer": optimizer,
        "batch_sizes": batch_sizes,
        "epochs": epochs,
    });
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut name = String::new();
    for &batch_size in batch_sizes {
        let spec = RunSpec {
            optimizer,
            epochs,
            batch_size,
            frequency_controller: false,
        };
        let runs = run_seeds(problem, spec, seeds, &snapshot)?;
        name = runs[0].trace.metadata.optimizer.clone();
        let per_seed: Vec<f64> = runs.iter().map(mid_training_eta).collect();
        rows.push(BatchRow {
            batch_size,
            mean_mid_eta: stats::mean(&per_seed),
            per_seed_mid_eta: per_seed,
        });
        series.extend(runs.into_iter().map(|r| {
            let (h, s) = r.smoothing.into_iter().unzip();
            SmoothingSeries {
                batch_size,
                seed: r.seed,
                h,
                s,
            }
        }));
    }
    let ratios = rows
        .windows(2)
        .map(|w| StepRatio {
            from: w[0].batch_size,
            to: w[1].batch_size,
            ratio: w[1].mean_mid_eta / w[0].mean_mid_eta,
        })
        .collect();
    Ok(ScalingReport {
        optimizer: name,
        problem: problem.name().to_string(),
        rows,
        ratios,
        series,
    })
}
