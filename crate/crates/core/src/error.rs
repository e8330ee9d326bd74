use thiserror::Error;

use crate::integrator::IntegrationError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Model constants violate the ordering the model relies on.
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// A state, input or argument lies outside the nonnegative domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid control law: {0}")]
    InvalidLaw(String),

    #[error("invalid gains: {0}")]
    InvalidGains(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("coexistence equilibrium search failed after {iterations} iterations: {reason} (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Integration(_) | Error::NoConvergence { .. })
    }
}
