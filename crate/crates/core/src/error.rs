//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by simulation, analysis, and psychophysics routines.
///
/// The variants separate bad parameters from conditions that only show up
/// once the numbers are in hand, so callers (the CLI in particular) can map
/// them onto distinct exit codes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A parameter or combination of parameters is out of range.
    #[error("invalid parameter: {0}")]
    Validation(String),

    /// An operating-region precondition does not hold; the message names
    /// the inequality that places the configuration outside the region.
    #[error("operating region violated: {0}")]
    Region(String),

    /// The input is degenerate for the requested statistic
    /// (for example zero-variance paired differences).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A computation produced a non-finite intermediate value.
    #[error("numeric failure: {0}")]
    NonFinite(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn region(msg: impl Into<String>) -> Self {
        Error::Region(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn non_finite(msg: impl Into<String>) -> Self {
        Error::NonFinite(msg.into())
    }
}
