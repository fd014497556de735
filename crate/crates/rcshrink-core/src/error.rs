//! Error taxonomy shared by every module.
//!
//! The four variants map one-to-one onto the CLI's exit-code contract:
//! parameter misuse, structural inconsistencies and bad input data, and
//! numerical failures are distinguishable by the caller.

use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An input object is internally inconsistent (level lengths, emptiness, ...).
    #[error("structural error: {0}")]
    Structure(String),

    /// Input data could not be read or parsed.
    #[error("data error: {0}")]
    Data(String),

    /// A numerical procedure failed to converge to its contract.
    #[error("numerical failure: {what} (achieved error estimate {achieved:.3e})")]
    Numerical {
        /// What was being computed.
        what: String,
        /// The best error estimate reached before giving up.
        achieved: f64,
    },
}

impl Error {
    /// Shorthand for a [`Error::Parameter`] with a formatted message.
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Shorthand for a [`Error::Structure`] with a formatted message.
    pub fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    /// Shorthand for a [`Error::Data`] with a formatted message.
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
