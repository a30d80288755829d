use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shifted basket value B0 is zero")]
    ZeroShiftedBasket,
    #[error("moment computation overflowed ({0})")]
    Overflow(String),
    #[error("moment matching failed: {0}")]
    MatchFailure(String),
    #[error("singular matching jacobian: {0}")]
    SingularJacobian(String),
}

impl PricingError {
    /// Validation failures, as opposed to numerical breakdowns.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            PricingError::DimensionMismatch(_)
                | PricingError::InvalidCorrelation(_)
                | PricingError::InvalidParameter(_)
                | PricingError::ZeroShiftedBasket
        )
    }
}

pub type Result<T> = std::result::Result<T, PricingError>;
