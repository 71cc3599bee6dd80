use thiserror::Error;

/// Errors raised by instance validation and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point has non-finite coordinate {value} at axis {axis}")]
    NonFinite { axis: usize, value: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("distribution {index}: probabilities sum to {sum}, expected 1")]
    ProbabilitySum { index: usize, sum: f64 },

    #[error("distribution {index}: probability {value} outside [0, 1]")]
    ProbabilityRange { index: usize, value: f64 },

    #[error("instance has no location with positive probability")]
    NoPresentLocation,

    #[error("collected {collected} of {requested} non-empty realizations after {trials} trials")]
    TrialsExhausted {
        trials: usize,
        collected: usize,
        requested: usize,
    },

    #[error("enumeration of {size} realizations exceeds the cap of {cap}; use Monte-Carlo estimation")]
    EnumerationCap { size: f64, cap: usize },

    #[error("implicit update at zero distance")]
    ZeroDistance,

    #[error("grid oracle supports d <= 2, got d = {0}")]
    GridDimension(usize),
}

impl Error {
    /// True for errors caused by a malformed instance rather than by a solver run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::NonFinite { .. }
                | Error::Empty(_)
                | Error::ZeroDimension
                | Error::InvalidParameter { .. }
                | Error::ProbabilitySum { .. }
                | Error::ProbabilityRange { .. }
                | Error::NoPresentLocation
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
