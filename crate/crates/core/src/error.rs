use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("offspring law is supercritical (mean {mean}); trees are not a.s. finite")]
    Supercritical { mean: f64 },

    #[error("tree size cap of {cap} vertices hit")]
    SizeCapExceeded { cap: usize },

    #[error("invalid tree encoding at index {index}: {reason}")]
    InvalidTree { index: usize, reason: String },

    #[error("invalid lattice path at index {index}: {reason}")]
    InvalidPath { index: usize, reason: String },

    #[error("index {index} out of range for size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("level -{level} is never hit by the path")]
    LevelNotHit { level: u64 },

    #[error("infeasible conditioning: P(T_{k} = {n}) = {probability}")]
    Infeasible { k: u64, n: u64, probability: f64 },

    #[error("tail truncation error {error:e} exceeds tolerance {tolerance:e}")]
    TruncationExceeded { error: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no crossing of the scaling curve found on the grid")]
    NoCrossing,

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("empty sample")]
    EmptySamples,

    #[error("parse error at line {line}, field {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
