use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("invalid multi-index {indices:?} in dimension {dim}")]
    InvalidIndex { indices: Vec<usize>, dim: usize },
    #[error("unknown calibration `{0}`")]
    UnknownCalibration(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("rank collapse during orthonormalization (step too large)")]
    RankCollapse,
    #[error("frame is not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("no structured sampler for calibration `{0}`")]
    NoSampler(String),
    #[error("plane is not tangential (normal component {0:.3e})")]
    NotTangential(f64),
    #[error("point is not on the boundary: {0}")]
    NotOnBoundary(String),
    #[error("point is not interior: rho = {0}")]
    NotInterior(f64),
    #[error("calibration `{0}` is not elliptic")]
    NotElliptic(String),
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
