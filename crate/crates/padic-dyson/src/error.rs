use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("sampler exceeded retry cap")]
    SamplerStuck,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("truncation too small: boundary mass {0}")]
    TruncationTooSmall(f64),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
