use thiserror::Error;

use crate::designer::IterationTrace;
use crate::socp::SolveStatus;

/// Errors produced while designing, evaluating or applying a filter.
#[derive(Debug, Error)]
pub enum DesignError {
    #[error("frequency {0} lies outside [0, 2]")]
    FrequencyOutOfRange(f64),

    #[error("denominator {value:.3e} at lambda = {lambda} is below the stability threshold")]
    DegenerateDenominator { lambda: f64, value: f64 },

    #[error("monomial conversion failed: {0}")]
    Conversion(String),

    #[error("invalid design spec: {0}")]
    InvalidSpec(String),

    #[error("previous iterate violates the stability constraint at lambda = {lambda} (denominator {value:.3e})")]
    InfeasiblePreviousIterate { lambda: f64, value: f64 },

    #[error("quadratic form is rank deficient: {below_floor} of {dim} eigenvalues below the floor")]
    RankDeficient { below_floor: usize, dim: usize },

    #[error("malformed cone program: {0}")]
    MalformedProblem(String),

    #[error("solver failed at iteration {iteration} with status {status:?}")]
    SolverFailure {
        iteration: usize,
        status: SolveStatus,
        trace: Box<IterationTrace>,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

pub type Result<T, E = DesignError> = std::result::Result<T, E>;
