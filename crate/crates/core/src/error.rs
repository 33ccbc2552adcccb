use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is infeasible for the {set} (violation {violation:e})")]
    Infeasible { set: &'static str, violation: f64 },

    #[error("bregman divergence undefined: coordinate {index} of the centre is zero")]
    ZeroCoordinate { index: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("constraint index {index} out of range (m = {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no productive steps when the stopping criterion fired after {iterations} iterations")]
    NoProductiveSteps { iterations: u64 },

    #[error("grid search supports n <= 3 (got n = {0})")]
    DimensionTooLarge(usize),

    #[error("no grid point satisfies the constraints at resolution {0}")]
    EmptyFeasibleGrid(usize),

    #[error("trace is thinned or lacks iterates; re-run with iterate recording")]
    TraceUnavailable,

    #[error("solution does not belong to this instance: {0}")]
    InstanceMismatch(String),

    #[error("malformed instance file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
