use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FslError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("space is disconnected")]
    Disconnected,
    #[error("operator is not self-adjoint with respect to the measure (defect {0:e})")]
    NotSelfAdjoint(f64),
    #[error("operator has negative eigenvalue {0:e}")]
    NotNonnegative(f64),
    #[error("input has a kernel component of size {0:e}")]
    KernelComponent(f64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("quadrature cross-check disagreement {0:e}")]
    Quadrature(f64),
    #[error("below threshold: {0}")]
    BelowThreshold(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("prerequisite unmet: {0}")]
    Prerequisite(String),
}

pub type Result<T> = std::result::Result<T, FslError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(FslError::InvalidParameter(msg.into()))
}
