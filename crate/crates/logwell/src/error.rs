//! Error type shared by every fallible operation in the crate.

use thiserror::Error;

/// Failure modes of construction, analysis, and integration routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Domain construction rejected the requested geometry or resolution.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Model or solver parameters are outside their admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A nodal or spectral vector has the wrong length for its domain.
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// A non-finite value entered or left a numerical kernel.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A scalar root/extremum search could not establish or hold a bracket.
    #[error("bracket search failed: {0}")]
    BracketFailure(String),

    /// An estimator could not produce a usable value from its samples.
    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    /// A monitor or post-processing routine was given unusable input.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
