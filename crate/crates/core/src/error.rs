use thiserror::Error;

/// Errors raised by the library.
///
/// Every constructor and operation reports violated preconditions through
/// one of these variants; nothing is silently repaired.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("degree {degree} does not divide {of}")]
    DegreeMismatch { degree: u32, of: u32 },

    #[error("unsupported field size: {0}")]
    Unsupported(String),

    #[error("element lies outside F_{{p^{degree}}}")]
    NotInSubfield { degree: u32 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("ambient spaces differ: {0}")]
    AmbientMismatch(String),

    #[error("vectors are linearly dependent")]
    DependentBasis,

    #[error("the zero vector has no weight")]
    ZeroVector,

    #[error("the zero subspace defines no linear set")]
    ZeroSubspace,

    #[error("code shapes differ: {0}")]
    ShapeMismatch(String),

    #[error("minimum distance unknown; run an exhaustive scan first")]
    DistanceUnknown,

    #[error("exhaustive scan needs {needed} codewords but the budget is {budget}; use sample mode")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("search exhausted without a witness: {0}")]
    SearchFailed(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    /// A computed object contradicts a proven statement. This is a bug.
    #[error("internal verification failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
