use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("numerical failure at iteration {iteration}: {message}")]
    NonFinite { iteration: usize, message: String },

    #[error("identification failure: {0}")]
    Identification(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("unpenalized logistic fit has no finite solution (coefficient norm {norm:.3e}); data are separable")]
    Separation { norm: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{file}: row {row}: {message}")]
    Validation {
        file: PathBuf,
        row: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("refusing to overwrite existing output {0}")]
    OutputExists(PathBuf),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
