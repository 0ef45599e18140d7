use thiserror::Error;

#[derive(Debug, Error)]
pub enum SandpileError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("not a wired tree: {0}")]
    NotATree(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("configuration is not stable")]
    NotStable,

    #[error("configuration is not recurrent")]
    NotRecurrent,

    #[error("enumeration needs {required} configurations, bound is {bound}")]
    BoundExceeded { bound: u64, required: String },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("prime {p} divides d(d-1) = {product}")]
    PrimeDividesDegree { p: u64, product: u64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SandpileError>;
