use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("matrix is singular")]
    Singular,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown model `{0}` (expected phi1..phi4 or model1..model8)")]
    UnknownModel(String),

    #[error("regressor Gram matrix is singular")]
    SingularDesign,

    #[error("series too short: {0}")]
    TooShort(String),

    #[error("degenerate residuals: {0}")]
    DegenerateResiduals(String),

    #[error("degenerate degrees of freedom: {0}")]
    DegenerateDf(String),

    #[error("replicate {replicate} failed after {attempts} attempts: {reason}")]
    ReplicateFailure {
        replicate: usize,
        attempts: u32,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{0}: no data rows")]
    EmptyData(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
