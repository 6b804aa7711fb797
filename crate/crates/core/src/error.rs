use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LalError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LalError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("calibration sample is empty")]
    EmptySample,

    #[error("calibration value at index {index} is NaN")]
    NanValue { index: usize },

    #[error("calibration value {value} at index {index} lies outside the support [{min}, {max}]")]
    OutOfSupport {
        index: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{what} requires n + m <= {cap}, got {got}")]
    CapExceeded {
        what: &'static str,
        cap: u64,
        got: u64,
    },

    #[error("record does not match loss arity: {0}")]
    Arity(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{0}")]
    SpecMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LalError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        LalError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LalError::Io {
            path: path.into(),
            source,
        }
    }
}
