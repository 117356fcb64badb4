//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Errors produced by construction, validation, and algorithm execution.
#[derive(Clone, Debug, PartialEq)]
pub enum CoreError {
    /// A parameter violated its documented domain (`what` explains which).
    InvalidParameter { what: String },
    /// Vector/matrix/instance dimensions do not agree.
    DimensionMismatch { expected: usize, got: usize },
    /// A body descriptor is empty or internally inconsistent.
    InvalidBody { what: String },
    /// The requested oracle is not available for this body kind.
    UnsupportedOracle { what: String },
    /// An operation was called on a cost kind that does not support it.
    UnsupportedCost { what: String },
    /// An algorithm produced a non-finite decision; the run is aborted.
    NonFiniteDecision { round: usize },
    /// An internal invariant failed, indicating an implementation bug.
    InvariantViolation { what: String },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
            CoreError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            CoreError::InvalidBody { what } => write!(f, "invalid body: {what}"),
            CoreError::UnsupportedOracle { what } => write!(f, "unsupported oracle: {what}"),
            CoreError::UnsupportedCost { what } => write!(f, "unsupported cost: {what}"),
            CoreError::NonFiniteDecision { round } => {
                write!(f, "non-finite decision at round {round}; run aborted")
            }
            CoreError::InvariantViolation { what } => write!(f, "invariant violation: {what}"),
        }
    }
}

impl core::error::Error for CoreError {}

impl CoreError {
    pub(crate) fn param(what: impl Into<String>) -> Self {
        CoreError::InvalidParameter { what: what.into() }
    }
}

pub type Result<T> = core::result::Result<T, CoreError>;
