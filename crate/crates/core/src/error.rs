use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("adam moments have not been updated yet (k = 0)")]
    MomentsNotInitialized,

    #[error("step {k} out of schedule range [0, {total})")]
    StepOutOfRange { k: u64, total: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset: {0}")]
    Dataset(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
