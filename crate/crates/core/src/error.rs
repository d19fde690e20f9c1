use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("k = {k} exceeds reference size {size}")]
    KTooLarge { k: usize, size: usize },

    #[error("insufficient data: need {needed}, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("no evaluation point has a k-NN ball inside the support bounds")]
    NoInteriorPoint,

    #[error("every k-NN radius is zero (duplicate saturation), density undefined")]
    DuplicateSaturation,

    #[error("density value at index {index} is {value}, must be finite and > 0")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("degenerate ensemble: variance is zero")]
    DegenerateVariance,

    #[error("covariance is not positive-definite")]
    NotPositiveDefinite,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("grid is not uniform (step {step} vs {other} at index {index})")]
    NonUniformGrid { step: f64, other: f64, index: usize },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("pair {tx}->{rx} has {have} records, need at least 2")]
    SparsePair { tx: u32, rx: u32, have: usize },

    #[error("sweep failed at size {size}, realization {realization}: {source}")]
    Pipeline {
        size: usize,
        realization: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
