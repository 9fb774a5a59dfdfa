use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    BadSubsystem { index: usize, count: usize },

    #[error("value {value} outside allowed range {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("no state pair with 0 < overlap < 1")]
    NotFound,

    #[error("optimizer did not converge: best {best}, required {required}")]
    Convergence { best: f64, required: f64 },

    #[error("locality violation: {0}")]
    LocalityViolation(String),

    #[error("program depth exceeds limit {limit}")]
    DepthLimit { limit: usize },

    #[error("no schedule value of c verifies the gap certificate")]
    CertificateFailure,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
