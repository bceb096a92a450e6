//! Command-line front end for the `logwell` solver.
//!
//! The library half of the binary: configuration parsing ([`config`]),
//! scenario presets realizing each qualitative regime ([`presets`]), the
//! subcommand implementations with their file outputs ([`commands`]), and
//! the property-verification suite ([`verify`]).
//!
//! Everything here is deterministic by construction: a fixed seed and a
//! fixed configuration reproduce output files byte for byte on a platform.

pub mod commands;
pub mod config;
pub mod presets;
pub mod verify;

pub use config::{load_config, parse_config, AnalysisSettings, ExperimentConfig, InitialData};
pub use presets::{generate_preset, PresetId};

/// Failure classes mapped one-to-one onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unusable configuration, flags, or environment (exit code 2).
    Config(String),
    /// A property, invariant, or preset hypothesis failed (exit code 1).
    Assertion(String),
    /// The numerics broke down: tolerance failure, lost bracket, non-finite
    /// value (exit code 3).
    Numerical(String),
}

impl CliError {
    /// The process exit code this failure class maps to.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Assertion(msg) => write!(f, "assertion failed: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<logwell::error::Error> for CliError {
    fn from(e: logwell::error::Error) -> Self {
        use logwell::error::Error;
        match e {
            Error::InvalidDomain(_)
            | Error::InvalidParameter(_)
            | Error::ShapeMismatch { .. }
            | Error::InvalidInput(_) => CliError::Config(e.to_string()),
            Error::NonFinite(_) | Error::BracketFailure(_) | Error::EstimationFailure(_) => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}
