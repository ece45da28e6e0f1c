use std::path::PathBuf;

use thiserror::Error;

use crate::conic::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("n must be even, got {0}")]
    OddN(usize),
    #[error("n = {n} is too small (minimum {min})")]
    TooSmallN { n: usize, min: usize },
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("polygon diameter {diameter} exceeds 1 + {tol}")]
    DiameterExceeded { diameter: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("constraint {index} is not a sum of squares bounded by an affine function")]
    NonConvexConstraint { index: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial point violates constraint {constraint} by {violation:e}")]
    InfeasibleInitial { constraint: usize, violation: f64 },
    #[error("subproblem solver stopped with status {status:?} at outer iteration {iteration}")]
    SubproblemFailure {
        status: SolveStatus,
        iteration: usize,
    },
    #[error("outer iteration limit {0} reached before convergence")]
    OuterLimit(usize),
    #[error("invalid polygon file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
