use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("field GF({q}) too small: need at least {needed} distinct points")]
    FieldTooSmall { q: u64, needed: u64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("divisibility violated: {0}")]
    Divisibility(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },
    #[error("refusing to enumerate {count} scenarios (cap {cap}); use sampling instead")]
    ScenarioCapExceeded { count: u128, cap: u128 },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
