use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GalError>;

#[derive(Debug, Error)]
pub enum GalError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    Length { expected: usize, found: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("problem too large: {0}")]
    Size(String),

    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl GalError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GalError::Io {
            path: path.into(),
            source,
        }
    }
}
