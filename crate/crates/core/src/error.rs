use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("damage value {0} outside [0, 1]")]
    DamageOutOfRange(f64),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("invalid constraint on dof {dof}: {reason}")]
    InvalidConstraint { dof: usize, reason: String },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("step {step} did not converge after {iterations} alternate-minimization iterations (last change {change:e})")]
    Unconverged {
        step: usize,
        iterations: usize,
        change: f64,
    },

    #[error("{path}:{line}: `{key}`: {message}")]
    Config {
        path: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
