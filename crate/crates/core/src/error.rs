use thiserror::Error;

/// Errors raised by the numeric routines (levels, decoding, metrics).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid score range [{min}, {max}]: bounds must be finite with min < max")]
    InvalidRange { min: f64, max: f64 },
    #[error("score {score} lies outside [{min}, {max}]")]
    OutOfRange { score: f64, min: f64, max: f64 },
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("level scale values must be finite and strictly increasing")]
    InvalidScale,
    #[error("unknown rating level {0:?}")]
    UnknownLevel(String),
    #[error("series lengths differ ({predictions} predictions, {labels} labels)")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("need at least {needed} paired values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate variance: {0} series is constant")]
    DegenerateVariance(&'static str),
    #[error("no level carries probability mass")]
    EmptyDistribution,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
