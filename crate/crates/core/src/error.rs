use thiserror::Error;

use crate::fock::FockError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("parameter `{name}` = {value} is invalid: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: &'static str,
    },
    #[error("model approximation violated: {0}")]
    Approximation(String),
    #[error("objective is not finite at {0}")]
    NonFinite(String),
    #[error("search failed: {0}")]
    Search(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn check_unit(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(SimError::InvalidParameter {
            name: name.to_string(),
            value,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(())
}

pub(crate) fn check_nonnegative(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(SimError::InvalidParameter {
            name: name.to_string(),
            value,
            reason: "must be finite and nonnegative",
        });
    }
    Ok(())
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(SimError::InvalidParameter {
            name: name.to_string(),
            value,
            reason: "must be finite and positive",
        });
    }
    Ok(())
}
