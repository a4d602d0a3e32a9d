use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("matrix is not hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("label count mismatch: {left} vs {right}")]
    LabelMismatch { left: usize, right: usize },
    #[error("decomposition failed: {0}")]
    DecompositionFailed(String),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("points cannot be separated: {0}")]
    NotSeparable(String),
    #[error("tower presentation has no classes")]
    EmptyTower,
    #[error("operation requires a distinguished degree-1 class (theta)")]
    ThetaRequired,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
