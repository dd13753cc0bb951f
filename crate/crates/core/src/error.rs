use thiserror::Error;

use crate::linalg::Matrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),

    /// The input is not the mathematical object it claims to be.
    #[error("invalid object: {0}")]
    Invalid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    /// A computed object lacks the structure it provably must have.
    #[error("structure error: {0}")]
    Structure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("oracle inconsistency: {0}")]
    OracleInconsistency(String),

    #[error("classification failed: {0}")]
    Classification(String),

    #[error("oracle budget of {0} queries exhausted")]
    BudgetExhausted(usize),

    /// A table-driven oracle was asked for a projection it does not list.
    #[error("oracle table has no entry for the queried projection")]
    TableMiss(Box<Matrix>),
}
