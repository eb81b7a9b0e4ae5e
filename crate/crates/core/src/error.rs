use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite potential value at the current state")]
    NonFiniteState,

    #[error("chain diverged at iteration {iteration}: non-finite state")]
    ChainDiverged { iteration: usize },

    #[error("optimizer produced a non-finite iterate at iteration {iteration}")]
    OptimizerDiverged { iteration: usize },

    #[error("series is constant; autocorrelation is undefined")]
    ConstantSeries,

    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("grid too narrow: {what} mass outside the grid is {mass:e}")]
    GridTooNarrow { what: &'static str, mass: f64 },

    #[error("CDF tabulation failed: {0}")]
    Tabulation(String),

    #[error("kernel is reducible: {0}")]
    Reducible(String),

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
