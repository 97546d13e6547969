use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter is outside its allowed domain.
    #[error("parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// An argument is well-formed but violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed round, path or stream structure.
    #[error("structural error: {0}")]
    Structure(String),

    /// File content failed validation.
    #[error("validation error at {location}: {message}")]
    Validation { location: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user-supplied parameters rather than bad data.
    pub fn is_parameter_error(&self) -> bool {
        matches!(self, Error::Parameter { .. } | Error::Domain(_))
    }
}
