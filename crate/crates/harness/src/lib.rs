//! Experiment runner for the `salsa-core` optimizers.
//!
//! Configs are JSON documents (see [`config`]). Every run is a pure function
//! of its config and seed, so emitted traces are byte-reproducible.

pub mod ablation;
pub mod compare;
pub mod config;
pub mod emit;
pub mod error;
pub mod experiment;
pub mod scaling;
pub mod stats;

pub use ablation::{frequency_ablation, AblationReport};
pub use compare::{compare, run_comparison, ComparisonTable};
pub use config::{ExperimentConfig, OptimizerKind, OptimizerSpec, ProblemSpec};
pub use emit::{emit, Format};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, RunSummary, SeedRun};
pub use scaling::{batch_scaling_experiment, ScalingReport};
