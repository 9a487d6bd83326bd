//! Training loop shared by all optimizers.

use crate::error::Result;
use crate::optimizer::{Batch, Optimizer, StepOutcome};
use crate::problems::{BatchSampler, Problem};
use crate::trace::{StepRecord, TraceMetadata, TrainingTrace};
use crate::vector::{norm_sq, ParamVector};

/// What an observer sees after every step.
pub struct StepView<'a> {
    /// Parameters the step started from.
    pub w: &'a ParamVector,
    pub batch: &'a Batch,
    pub outcome: &'a StepOutcome,
    pub optimizer: &'a dyn Optimizer,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub trace: TrainingTrace,
    pub final_w: ParamVector,
}

/// Runs an optimizer on one problem with seeded initialisation and batches.
pub struct Trainer<'p> {
    problem: &'p dyn Problem,
    batch_size: usize,
    seed: u64,
    config: serde_json::Value,
}

impl<'p> Trainer<'p> {
    pub fn new(problem: &'p dyn Problem, batch_size: usize, seed: u64) -> Self {
        Self {
            problem,
            batch_size,
            seed,
            config: serde_json::Value::Null,
        }
    }

    /// Configuration snapshot stored in the trace metadata.
    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    pub fn sampler(&self) -> BatchSampler {
        BatchSampler::new(self.seed, self.batch_size, self.problem.dataset_size())
    }

    /// Steps per epoch with this batch size.
    pub fn steps_per_epoch(&self) -> u64 {
        self.sampler().batches_per_epoch() as u64
    }

    /// Runs `steps` iterations from the seeded initial point. Record 0 is a
    /// full-batch evaluation of the starting point.
    pub fn run(&self, optimizer: &mut dyn Optimizer, steps: u64) -> Result<TrainingTrace> {
        let w0 = self.problem.initial_point(self.seed);
        Ok(self.run_from(optimizer, w0, steps, |_| {})?.trace)
    }

    /// Full-control variant: explicit starting point and a per-step observer.
    pub fn run_from(
        &self,
        optimizer: &mut dyn Optimizer,
        w0: ParamVector,
        steps: u64,
        mut observe: impl FnMut(&StepView<'_>),
    ) -> Result<TrainResult> {
        let mut trace = TrainingTrace::new(TraceMetadata {
            optimizer: optimizer.name(),
            problem: self.problem.name().to_string(),
            seed: self.seed,
            config: self.config.clone(),
        });
        let full = self.problem.loss_grad(&w0, &self.problem.all_indices())?;
        trace.push(StepRecord::unsearched(
            0,
            optimizer.current_eta(),
            full.loss,
            norm_sq(&full.grad),
            0,
        ))?;

        let mut sampler = self.sampler();
        let mut w = w0;
        for k in 1..=steps {
            let batch = sampler.sample(k - 1);
            let outcome = optimizer.step(self.problem, &w, &batch, k)?;
            observe(&StepView {
                w: &w,
                batch: &batch,
                outcome: &outcome,
                optimizer: &*optimizer,
            });
            trace.push(outcome.record)?;
            w = outcome.w_next;
        }
        Ok(TrainResult { trace, final_w: w })
    }
}
