use thiserror::Error;

pub type Result<T> = std::result::Result<T, QfnError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QfnError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// `1 - V_ii X` (or some other required inverse) is numerically singular.
    #[error("algebraic loop: reciprocal condition {rcond:.3e} below threshold")]
    AlgebraicLoop { rcond: f64 },

    #[error("scattering matrix is not unitary (defect {defect:.3e})")]
    NotUnitaryScattering { defect: f64 },

    #[error("operator is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not star-unitary (left defect {left:.3e}, right defect {right:.3e})")]
    NotStarUnitary { left: f64, right: f64 },

    #[error("malformed structure: {0}")]
    MalformedStructure(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub(crate) fn mismatch(msg: impl Into<String>) -> QfnError {
    QfnError::DimensionMismatch(msg.into())
}
