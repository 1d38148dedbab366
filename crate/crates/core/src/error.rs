use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PcspError {
    #[error("signature mismatch: {0}")]
    Signature(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("invalid template spec: {0}")]
    Spec(String),
    #[error("invalid template: {0}")]
    Template(String),
    #[error("dimension mismatch: {0}")]
    Dim(String),
    #[error("inapplicable case: {0}")]
    Case(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = PcspError> = std::result::Result<T, E>;
