use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sieving set: {0}")]
    InvalidSet(String),

    #[error("sieving set elements {a} and {b} are not coprime (gcd {gcd})")]
    NotCoprime { a: u64, b: u64, gcd: u64 },

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("covariance matrix is not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
