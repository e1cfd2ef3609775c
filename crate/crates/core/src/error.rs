//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("precision mismatch: {0} vs {1}")]
    PrecisionMismatch(usize, usize),

    #[error("precision underflow: {0}")]
    PrecisionUnderflow(String),

    #[error("division by a non-unit (valuation {0})")]
    NonUnitDivisor(usize),

    #[error("inexact division: {0}")]
    InexactDivision(String),

    #[error("target degree {0} does not divide source degree {1}")]
    NonDividingDegree(usize, usize),

    #[error("matrix not invertible at the working precision")]
    SingularMatrix,

    #[error("count sequence admits no validated fit: {0}")]
    CountFitRefused(String),

    #[error("internal consistency check failed: {0}")]
    ConsistencyFailure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
