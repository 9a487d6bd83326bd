use crate::error::Result;
use crate::problems::Problem;
use crate::salsa::SmoothState;
use crate::trace::StepRecord;
use crate::vector::ParamVector;

/// Sample indices for one step, with the seed that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub seed: u64,
}

impl Batch {
    /// Every sample of a dataset of size `n`.
    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub w_next: ParamVector,
    pub record: StepRecord,
    /// Direction probed by the line search, for searched steps.
    pub search_direction: Option<ParamVector>,
}

pub trait Optimizer: Send {
    fn name(&self) -> String;

    /// Step size the next unsearched step would use.
    fn current_eta(&self) -> f64;

    /// Smoothed line-search statistics, for optimizers that keep them.
    fn smooth_state(&self) -> Option<SmoothState> {
        None
    }

    fn step(&mut self, problem: &dyn Problem, w: &ParamVector, batch: &Batch, k: u64) -> Result<StepOutcome>;
}
