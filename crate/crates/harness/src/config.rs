//! JSON experiment configuration and the problem/optimizer factories.

use std::path::{Path, PathBuf};

use salsa_core::baselines::{presets, FixedLr, ScheduleConfig, ScheduleShape};
use salsa_core::directions::{AdamParams, DirectionKind};
use salsa_core::line_search::{SearchParams, Sls, SlsConfig};
use salsa_core::problems::{
    load_csv_dataset, LogReg, LogRegConfig, MatFactConfig, MatrixFactorization, Mlp, MlpConfig, Quadratic,
};
use salsa_core::salsa::{Salsa, SalsaConfig};
use salsa_core::{Optimizer, Problem};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        cond: f64,
        seed: u64,
    },
    Logreg(LogRegConfig),
    Mlp(MlpConfig),
    MatrixFactorization(MatFactConfig),
    /// User-supplied CSV rows of features followed by a label.
    Csv {
        path: PathBuf,
        #[serde(default)]
        model: CsvModel,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CsvModel {
    #[default]
    Logreg,
    Mlp {
        hidden: usize,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Box<dyn Problem>> {
        let problem: Box<dyn Problem> = match *self {
            ProblemSpec::Quadratic { dim, cond, seed } => {
                if dim == 0 || !(cond >= 1.0) {
                    return Err(HarnessError::Config("quadratic needs dim >= 1 and cond >= 1".into()));
                }
                Box::new(Quadratic::new(dim, cond, seed))
            }
            ProblemSpec::Logreg(cfg) => {
                if cfg.n < 2 || cfg.dim == 0 || !(0.0..0.5).contains(&cfg.label_noise) {
                    return Err(HarnessError::Config(
                        "logreg needs n >= 2, dim >= 1 and label_noise in [0, 0.5)".into(),
                    ));
                }
                Box::new(LogReg::new(cfg))
            }
            ProblemSpec::Mlp(cfg) => {
                if cfg.n < 2 || cfg.in_dim == 0 || cfg.hidden == 0 {
                    return Err(HarnessError::Config(
                        "mlp needs n >= 2, in_dim >= 1 and hidden >= 1".into(),
                    ));
                }
                Box::new(Mlp::new(cfg))
            }
            ProblemSpec::MatrixFactorization(cfg) => {
                if cfg.rank == 0 || cfg.rank > cfg.rows.min(cfg.cols) {
                    return Err(HarnessError::Config(
                        "matrix factorization needs 1 <= rank <= min(rows, cols)".into(),
                    ));
                }
                Box::new(MatrixFactorization::new(cfg))
            }
            ProblemSpec::Csv { ref path, model, seed } => {
                let data = load_csv_dataset(path)?;
                match model {
                    CsvModel::Logreg => Box::new(LogReg::from_dataset(&data, seed)),
                    CsvModel::Mlp { hidden } if hidden >= 1 => Box::new(Mlp::from_dataset(&data, hidden, seed)),
                    CsvModel::Mlp { .. } => return Err(HarnessError::Config("mlp needs hidden >= 1".into())),
                }
            }
        };
        if problem.dataset_size() == 0 {
            return Err(HarnessError::Config("problem has no training samples".into()));
        }
        Ok(problem)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    SgdSls,
    AdamSls,
    SgdSalsa,
    AdamSalsa,
}

impl OptimizerKind {
    pub fn direction(self) -> DirectionKind {
        match self {
            OptimizerKind::Sgd | OptimizerKind::SgdSls | OptimizerKind::SgdSalsa => DirectionKind::Sgd,
            _ => DirectionKind::Adam,
        }
    }

    pub fn uses_line_search(self) -> bool {
        !matches!(self, OptimizerKind::Sgd | OptimizerKind::Adam)
    }
}

/// Optimizer kind plus hyperparameters. Fields that do not apply to the
/// chosen kind are rejected by [`OptimizerSpec::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    /// Peak learning rate of the fixed-lr baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta3: Option<f64>,
    #[serde(default)]
    pub enforce_nondecrease: bool,
    #[serde(default)]
    pub search: SearchParams,
    #[serde(default)]
    pub adam: AdamParams,
}

impl OptimizerSpec {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            lr: None,
            schedule: None,
            c: None,
            beta3: None,
            enforce_nondecrease: false,
            search: SearchParams::default(),
            adam: AdamParams::default(),
        }
    }

    pub fn fixed(kind: OptimizerKind, lr: f64) -> Self {
        Self {
            lr: Some(lr),
            ..Self::new(kind)
        }
    }

    /// Short display name, e.g. `adam_salsa` or `adam(lr=0.01)`.
    pub fn label(&self) -> String {
        let kind = serde_json::to_value(self.kind).expect("kind serialises");
        let kind = kind.as_str().expect("kind is a string");
        match self.lr {
            Some(lr) => format!("{kind}(lr={lr})"),
            None => kind.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let misplaced = |field: &str| {
            Err(HarnessError::Config(format!(
                "`{field}` does not apply to {:?}",
                self.kind
            )))
        };
        match self.kind {
            OptimizerKind::Sgd | OptimizerKind::Adam => {
                if self.c.is_some() {
                    return misplaced("c");
                }
                if self.beta3.is_some() {
                    return misplaced("beta3");
                }
                if self.enforce_nondecrease {
                    return misplaced("enforce_nondecrease");
                }
            }
            OptimizerKind::SgdSls | OptimizerKind::AdamSls => {
                if self.lr.is_some() {
                    return misplaced("lr");
                }
                if self.beta3.is_some() {
                    return misplaced("beta3");
                }
                if self.enforce_nondecrease {
                    return misplaced("enforce_nondecrease");
                }
                self.sls_config().validate()?;
            }
            OptimizerKind::SgdSalsa | OptimizerKind::AdamSalsa => {
                if self.lr.is_some() {
                    return misplaced("lr");
                }
                self.salsa_config().validate()?;
            }
        }
        if self.lr.is_some_and(|lr| !(lr > 0.0)) {
            return Err(HarnessError::Config("lr must be positive".into()));
        }
        Ok(())
    }

    fn sls_config(&self) -> SlsConfig {
        let default = SlsConfig::default();
        SlsConfig {
            c: self.c.unwrap_or(default.c),
            search: self.search,
        }
    }

    fn salsa_config(&self) -> SalsaConfig {
        let default = SalsaConfig::default();
        SalsaConfig {
            c: self.c.unwrap_or(default.c),
            beta3: self.beta3.unwrap_or(default.beta3),
            enforce_nondecrease: self.enforce_nondecrease,
            search: self.search,
        }
    }

    fn schedule(&self, total_steps: u64) -> ScheduleConfig {
        let lr = self.lr.unwrap_or(match self.kind.direction() {
            DirectionKind::Sgd => presets::SGD_IMAGE,
            DirectionKind::Adam => presets::ADAM_IMAGE,
        });
        match self.schedule.unwrap_or(ScheduleShape::CosineWarmup) {
            // A zero-step run never queries the schedule.
            _ if total_steps == 0 => ScheduleConfig::flat(lr, 1),
            ScheduleShape::Flat => ScheduleConfig::flat(lr, total_steps),
            ScheduleShape::CosineWarmup => ScheduleConfig::cosine_warmup(lr, total_steps),
        }
    }

    /// Builds a fresh optimizer for one run of `total_steps` steps.
    pub fn build(&self, dim: usize, total_steps: u64, frequency_controller: bool) -> Result<Box<dyn Optimizer>> {
        self.validate()?;
        let dir = self.kind.direction();
        let opt: Box<dyn Optimizer> = match self.kind {
            OptimizerKind::Sgd | OptimizerKind::Adam => {
                if frequency_controller {
                    log::warn!("frequency controller has no effect on fixed-lr {:?}", self.kind);
                }
                let schedule = self.schedule(total_steps);
                schedule.validate()?;
                Box::new(FixedLr::with_adam_params(dir, schedule, dim, self.adam))
            }
            OptimizerKind::SgdSls | OptimizerKind::AdamSls => {
                let sls = Sls::with_adam_params(dir, self.sls_config(), dim, self.adam);
                if frequency_controller {
                    Box::new(sls.with_frequency_control())
                } else {
                    Box::new(sls)
                }
            }
            OptimizerKind::SgdSalsa | OptimizerKind::AdamSalsa => {
                let salsa = Salsa::with_adam_params(dir, self.salsa_config(), dim, self.adam);
                if frequency_controller {
                    Box::new(salsa.with_frequency_control())
                } else {
                    Box::new(salsa)
                }
            }
        };
        Ok(opt)
    }
}

/// One optimizer on one problem over several seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub seeds: Vec<u64>,
    pub epochs: u64,
    pub batch_size: usize,
    #[serde(default)]
    pub frequency_controller: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self, problem: &dyn Problem) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        if self.batch_size == 0 || self.batch_size > problem.dataset_size() {
            return Err(HarnessError::Config(format!(
                "batch_size must lie in [1, {}] for {}",
                problem.dataset_size(),
                problem.name()
            )));
        }
        self.optimizer.validate()
    }

    /// Snapshot stored in trace metadata; excludes the output path so traces
    /// do not depend on where they are written.
    pub fn snapshot(&self) -> serde_json::Value {
        let mut cfg = self.clone();
        cfg.output = None;
        serde_json::to_value(cfg).expect("config serialises")
    }
}

/// Several optimizers across several problems, for `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub problems: Vec<ProblemSpec>,
    pub optimizers: Vec<OptimizerSpec>,
    pub seeds: Vec<u64>,
    pub epochs: u64,
    pub batch_size: usize,
    #[serde(default)]
    pub frequency_controller: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub problem: ProblemSpec,
    #[serde(default = "default_scaling_optimizer")]
    pub optimizer: OptimizerSpec,
    #[serde(default = "default_batch_sizes")]
    pub batch_sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epochs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    pub problem: ProblemSpec,
    #[serde(default = "default_scaling_optimizer")]
    pub optimizer: OptimizerSpec,
    pub seeds: Vec<u64>,
    pub epochs: u64,
    pub batch_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckConfig {
    pub problem: ProblemSpec,
    #[serde(default = "default_points")]
    pub points: u64,
    #[serde(default = "default_fd_step")]
    pub h: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_scaling_optimizer() -> OptimizerSpec {
    OptimizerSpec::new(OptimizerKind::AdamSalsa)
}

pub fn default_batch_sizes() -> Vec<usize> {
    vec![4, 8, 16, 32]
}

fn default_points() -> u64 {
    10
}

fn default_fd_step() -> f64 {
    1e-5
}

fn default_tolerance() -> f64 {
    1e-4
}

/// Reads and parses a JSON config file.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}
