use thiserror::Error;

use crate::gauge::GaugeViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("time order violated: t = {t} < s = {s}")]
    TimeOrderViolation { t: f64, s: f64 },

    #[error("negative time {0}: all evaluation times must be nonnegative")]
    NegativeTime(f64),

    #[error("non-finite value in {context}; shorten the probe horizon")]
    NonFinite { context: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("power iteration did not converge within {iterations} iterations")]
    ConvergenceFailure { iterations: usize },

    #[error("evaluation budget of {cap} exceeded before reaching tolerance")]
    BudgetExceeded { cap: usize },

    #[error("invalid gauge: {0}")]
    InvalidGauge(GaugeViolation),

    #[error("degenerate probe: zero norm at t0 = {t0}, s = {s}")]
    DegenerateProbe { t0: f64, s: f64 },

    #[error("criterion requires a verified growth envelope")]
    MissingGrowthEnvelope,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::TimeOrderViolation { .. }
                | Error::NegativeTime(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidGauge(_)
                | Error::InvalidParams(_)
                | Error::InvalidState(_)
                | Error::Config(_)
        )
    }
}
