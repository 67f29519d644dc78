use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BanditError {
    #[error("non-finite value {value} passed to {what}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("all scores are NaN")]
    AllNaN,

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),

    #[error("arm {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("step {step} beyond the adversarial matrix horizon {horizon}")]
    BeyondHorizon { step: u64, horizon: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, BanditError>;

pub(crate) fn check_finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(BanditError::NonFinite { what, value })
    }
}

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> BanditError {
    BanditError::InvalidParameter {
        name,
        value,
        reason,
    }
}
