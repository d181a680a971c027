use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} id {id} out of range (len {len})")]
    OutOfRange { what: &'static str, id: usize, len: usize },

    #[error("length mismatch in {context}: expected {expected}, got {actual}")]
    LengthMismatch { context: &'static str, expected: usize, actual: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("direction vector must be non-zero")]
    ZeroVector,

    #[error("zero-norm embedding row for word '{0}'")]
    ZeroNorm(String),

    #[error("LiSSA recursion diverged at step {step} (iterate norm {norm:e}); increase scale or damping")]
    Divergence { step: usize, norm: f64 },

    #[error("Cholesky factorization failed at pivot {pivot} (value {value:e}); increase damping")]
    Factorization { pivot: usize, value: f64 },

    #[error("unknown words: {}", .0.join(", "))]
    UnknownWords(Vec<String>),

    #[error("label {0} has no mapped cluster")]
    UnmappedLabel(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty cluster after {attempts} k-means attempts")]
    EmptyCluster { attempts: usize },

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("{source_name}:{line}: {message}")]
    Parse { source_name: String, line: usize, message: String },

    #[error("operation not supported: {0}")]
    Unsupported(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
