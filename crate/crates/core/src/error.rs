use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch{}: expected {expected}, got {found}", operator.map(|k| format!(" in operator {k}")).unwrap_or_default())]
    DimensionMismatch {
        operator: Option<usize>,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("metric is not strongly positive: {0}")]
    Metric(String),

    /// A convergence hypothesis of the selected algorithm does not hold.
    #[error("step-size condition violated: {0}")]
    ConditionViolated(String),

    #[error("non-finite value produced by {step} at iteration {iteration}")]
    NonFinite { step: String, iteration: usize },

    #[error("divergence detected at iteration {iteration}: objective {objective:e}")]
    Diverged { iteration: usize, objective: f64 },

    #[error("negative quadratic form {value:e}; metric parameters are invalid")]
    NegativeQuadraticForm { value: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConditionViolated(_) => 3,
            Error::NonFinite { .. } | Error::Diverged { .. } => 1,
            _ => 2,
        }
    }
}
