use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input was outside the domain of the operation (NaN, inf, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid spike train: {0}")]
    InvalidTrain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("protocol repetition {rep}: {msg}")]
    Protocol { rep: usize, msg: String },

    #[error("row {row}, field `{field}`: {msg}")]
    Parse {
        row: usize,
        field: String,
        msg: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("data point `{label}`: {source}")]
    Point {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed run.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Point { source, .. } => source.is_validation(),
            Error::Fit(_) | Error::Io(_) | Error::File { .. } => false,
            _ => true,
        }
    }
}
