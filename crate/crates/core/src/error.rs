//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by configuration parsing, argument validation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside its documented range.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument {
        /// Name of the offending parameter or config key.
        name: &'static str,
        /// Human-readable constraint that was violated.
        reason: String,
    },

    /// A config file line or override could not be parsed.
    #[error("config error for key `{key}`: {reason}")]
    Config {
        /// The key named in the diagnostic.
        key: String,
        /// What went wrong.
        reason: String,
    },

    /// Underlying I/O failure, annotated with the path involved.
    #[error("i/o error on `{path}`: {source}")]
    Io {
        /// Path of the file or directory involved.
        path: String,
        /// The original error.
        #[source]
        source: std::io::Error,
    },

    /// A transcript or CSV file did not match the documented schema.
    #[error("malformed input `{path}`: {reason}")]
    Malformed {
        /// Path of the offending file.
        path: String,
        /// What failed to parse.
        reason: String,
    },
}

impl Error {
    /// An invalid argument to a library operation.
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// A rejected configuration key or value.
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// An I/O failure tagged with the path involved.
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
