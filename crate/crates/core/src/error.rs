use alloc::string::String;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("convention mismatch: problem is {problem:?}, state is {state:?}")]
    ConventionMismatch {
        problem: crate::ising::Convention,
        state: crate::ising::Convention,
    },
    #[error("problem is already in the binary convention")]
    AlreadyBinary,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("cut undefined: coupling J[{i}][{j}] = {value} is not in {{0, 1}}")]
    NotMaxCut { i: usize, j: usize, value: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("fixed-point overflow: {parameter} = {value} outside [{min}, {max}]")]
    QuantizationOverflow {
        parameter: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("instance has {n} spins, exhaustive search is capped at {cap}; use the annealing oracle")]
    OracleCapExceeded { n: usize, cap: usize },
    #[error("no samples recorded")]
    Empty,
    #[error("missing ground truth for instance `{0}`")]
    MissingGroundTruth(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
