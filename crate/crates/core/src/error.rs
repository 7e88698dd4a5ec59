use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed descriptor {path}: {source}")]
    Descriptor {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing channel file {0}")]
    MissingChannel(PathBuf),

    #[error("size mismatch in {path}: expected {expected} bytes, found {found}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: String, index: usize },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid window {window}: {reason}")]
    InvalidWindow { window: usize, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("all sample weights are zero")]
    ZeroWeights,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(String),

    #[error("invalid quantization: {0}")]
    InvalidQuantization(String),

    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
