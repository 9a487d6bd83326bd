//! Stochastic Armijo line searches for SGD and Adam, including the
//! exponentially smoothed acceptance criterion (SaLSa), a line-search
//! frequency controller, fixed learning-rate baselines and a set of small
//! analytic test problems.
//!
//! ```
//! use salsa_core::directions::DirectionKind;
//! use salsa_core::problems::{Problem, Quadratic};
//! use salsa_core::salsa::{Salsa, SalsaConfig};
//! use salsa_core::train::Trainer;
//!
//! let problem = Quadratic::new(4, 10.0, 7);
//! let mut opt = Salsa::new(DirectionKind::Sgd, SalsaConfig::default(), problem.dim());
//! let trace = Trainer::new(&problem, 1, 1).run(&mut opt, 500).unwrap();
//! assert!(trace.records.last().unwrap().loss < 1e-6);
//! ```

pub mod baselines;
pub mod directions;
pub mod error;
pub mod frequency;
pub mod line_search;
pub mod optimizer;
pub mod problems;
pub mod replay;
pub mod salsa;
pub mod trace;
pub mod train;
pub mod vector;

pub use error::{Error, Result};
pub use optimizer::{Batch, Optimizer, StepOutcome};
pub use problems::Problem;
pub use trace::{CriterionCheck, StepRecord, TraceMetadata, TrainingTrace};
pub use vector::{axpy, norm_sq, EvalResult, ParamVector};
