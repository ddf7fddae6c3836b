use std::path::PathBuf;

use thiserror::Error;

use crate::tasks::idx::IdxError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite fitness for candidate {index}")]
    NonFiniteFitness { index: usize },

    #[error("non-finite value at coordinate {index} of {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("population size {0} must be even for antithetic sampling")]
    OddPopulation(usize),

    #[error("state was not produced by strategy `{0}`")]
    StateMismatch(&'static str),

    #[error(transparent)]
    Idx(#[from] IdxError),

    #[error("task data missing at {}: {hint}", path.display())]
    TaskDataMissing { path: PathBuf, hint: String },

    #[error("label {label} outside [0, {classes})")]
    InvalidLabel { label: usize, classes: usize },

    #[error("generator invariant violated: {0}")]
    Generator(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line entry point.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::OddPopulation(_)
            | Error::StateMismatch(_)
            | Error::DimensionMismatch { .. }
            | Error::Serialization(_) => 2,
            Error::TaskDataMissing { .. } | Error::Idx(_) | Error::InvalidLabel { .. } => 3,
            Error::NonFiniteFitness { .. } | Error::NonFinite { .. } => 4,
            Error::Generator(_) | Error::Io { .. } => 1,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}
