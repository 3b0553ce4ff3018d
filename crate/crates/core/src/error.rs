//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("operation requires a product space E x E*")]
    NotProductSpace,

    #[error("no closed form for {0}; use the grid oracle")]
    NoClosedForm(String),

    #[error("solver budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("function lies below q_L at a sample point (margin {margin:e})")]
    NotAboveQuadratic { margin: f64, point: Vec<f64> },

    #[error("inner minimization failed at step {step}: slack {achieved:e} exceeds {required:e}")]
    InnerMinimizerFailed {
        step: usize,
        achieved: f64,
        required: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("routes disagree: {0}")]
    Inconsistent(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
