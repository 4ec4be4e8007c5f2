use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("training diverged at step {step}: loss = {loss}")]
    Training { step: usize, loss: f64 },

    #[error("no trained model for rho = {rho} (looked for {path}); run `jcas train --rho {rho}` or enable train_if_missing")]
    MissingModel { rho: f64, path: PathBuf },

    #[error("cannot load model {path}: {reason}")]
    ModelLoad { path: PathBuf, reason: LoadError },

    #[error("cannot read config {path}: {reason}")]
    Config { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Why a model file could not be decoded.
#[derive(Debug, Error, PartialEq)]
pub enum LoadError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt file: {0}")]
    Corrupt(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn ensure_dims(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Dimension(msg()))
    }
}
