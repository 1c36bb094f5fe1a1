use thiserror::Error;

/// Errors raised by sketch generation, linear algebra and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OseError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("rank deficient: {0}")]
    Rank(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("outcome space of {outcomes} configurations exceeds the enumeration cap of {cap}")]
    SpaceTooLarge { outcomes: f64, cap: u64 },
}

impl OseError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        OseError::Parameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        OseError::Shape(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, OseError>;
