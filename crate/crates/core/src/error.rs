use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("polarization needs {required} symmetrized operators, budget is {budget}")]
    BudgetExceeded { required: u128, budget: usize },

    #[error("numerical integrity check failed: {0}")]
    Integrity(String),

    #[error("matrix is not nilpotent: eigenvalue of modulus {0:e} is away from zero")]
    NotNilpotent(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
