use thiserror::Error;

use crate::lp::LpStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("set is empty")]
    Empty,

    #[error("linear program ended with status {0:?}")]
    Lp(LpStatus),

    #[error("vertex budget exceeded: dimension {dim} is above the cap {cap}")]
    VertexBudget { dim: usize, cap: usize },

    #[error("candidate parallelotope does not contain the set")]
    NotContained,

    #[error("interval Hessian unavailable for component {0}")]
    HessianUnavailable(usize),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(op: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { op, expected, found })
    }
}
