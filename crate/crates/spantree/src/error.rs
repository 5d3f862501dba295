//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input parameter is out of range, non-finite or inconsistent.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam {
        /// Parameter name as used in configuration files.
        name: String,
        /// Human readable explanation.
        reason: String,
    },
    /// A text input (edge list, tree file, config file) could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse {
        /// One-based line number.
        line: usize,
        /// Human readable explanation.
        reason: String,
    },
    /// A structural precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A construction is infeasible for the requested parameters.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// A randomized stage failed; the caller may retry with fresh randomness.
    #[error("stage `{stage}` failed: {reason}")]
    StageFailure {
        /// Stage tag, e.g. `round1.step1`.
        stage: String,
        /// Diagnostic message.
        reason: String,
    },
    /// An exact invariant was violated. This always indicates a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// I/O failure while reading or writing a file.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Shorthand for [`Error::InvalidParam`].
    pub fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam { name: name.to_string(), reason: reason.into() }
    }

    /// Shorthand for [`Error::StageFailure`].
    pub fn stage(stage: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::StageFailure { stage: stage.into(), reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
