//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while validating inputs or running a
/// decomposition. Variants map one-to-one onto the CLI exit codes.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not Hermitian: asymmetry {residual:.3e} exceeds {threshold:.3e}")]
    NotHermitian { residual: f64, threshold: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} below -{threshold:.3e}")]
    NotPSD { eigenvalue: f64, threshold: f64 },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("|q({i},{j})| = {modulus} must be 1 for doubly q-commuting verification")]
    NonUnimodularQ { i: usize, j: usize, modulus: f64 },

    #[error("Q({i},{j}) does not commute with the tuple operators: residual {residual:.3e}")]
    QNotCommutingWithOperators { i: usize, j: usize, residual: f64 },

    #[error("operator is not a contraction: norm {norm}")]
    NotAContraction { norm: f64 },

    #[error("operator is not completely non-unitary: {0}")]
    NotCNU(String),

    #[error("operator tuple is not an isometry tuple: {0}")]
    NotIsometric(String),

    #[error("tuple is not q-commuting: {0}")]
    NotQCommuting(String),

    #[error("doubly commutation violated: {0}")]
    NotDoublyCommuting(String),

    #[error("unsupported signature: {0}")]
    UnsupportedSignature(String),

    #[error("structured operators are not supported by this operation: {0}")]
    StructuredUnsupported(String),

    #[error("internal error: {0}")]
    Internal(String),
}
