use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by waveform construction, Gramian assembly, and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid waveform configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid clutter region: {0}")]
    InvalidRegion(String),

    #[error("interval {name} is empty: [{lo}, {hi}]")]
    EmptyInterval {
        name: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e} exceeds {allowed:e})")]
    NotHermitian { asymmetry: f64, allowed: f64 },

    #[error("matrix dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),

    #[error("covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("waveform kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("blocks do not partition the sample index set: {0}")]
    NotAPartition(String),

    #[error("normalized clutter rank {0} leaves no clutter-free subspace")]
    FdlUndefined(f64),

    #[error("clutter range interval must span the full unambiguous range for block decomposition")]
    PartialRange,

    #[error("target lies inside the clutter region: {0}")]
    TargetInClutter(String),

    #[error("invalid detection scenario: {0}")]
    InvalidScenario(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
