//! Crate-wide error type.

use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// All pairwise distances are zero; no length scale can be inferred.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A requested feature map would exceed the configured size cap.
    #[error("capacity exceeded: map of {requested} entries exceeds cap of {cap}")]
    CapacityExceeded { requested: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two embeddings built from different feature-map specs were compared.
    #[error("incompatible embeddings: fingerprint {left:#018x} vs {right:#018x}")]
    IncompatibleEmbedding { left: u64, right: u64 },

    /// Calibration sensitivity does not match the embedding's bound.
    #[error("sensitivity mismatch: calibration carries {calibrated}, embedding requires {required}")]
    SensitivityMismatch { calibrated: f64, required: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Bisection or another internal numeric routine failed to converge.
    #[error("internal numeric failure: {0}")]
    Numeric(String),

    /// Training aborted on a non-finite loss or gradient.
    #[error("numerical abort at epoch {epoch}, step {step}: {reason}")]
    NumericalAbort {
        epoch: usize,
        step: usize,
        reason: String,
    },

    #[error("shape mismatch in computation graph: {0}")]
    GraphShape(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
