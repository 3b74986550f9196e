use thiserror::Error;

/// Errors raised by kernel construction, compression, partitioning and the
/// benchmark harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data is malformed (non-finite values, empty matrices, ...).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An operator has a zero degree or zero row.
    #[error("degenerate operator: {0}")]
    Degenerate(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("eigensolver did not converge after {iterations} matrix-vector products (max residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    /// The leading eigenvalue of a diffusion operator is not 1.
    #[error("spectrum check failed: {0}")]
    Spectrum(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A checked mathematical identity did not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at row {row}, column {column}: {reason}")]
    Parse { row: usize, column: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
