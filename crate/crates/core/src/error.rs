//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration value is outside its valid domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature on [{lo}, {hi}] did not converge (estimate {estimate}, error {error_estimate})")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error_estimate: f64,
    },

    /// A Monte Carlo ratio estimator saw no accepted samples.
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    /// A root finder observed evaluations inconsistent with the monotonicity it relies on.
    #[error("solver failure: {0}")]
    Solver(String),

    /// The requested rule/distribution combination has no implemented closed form.
    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// Explicit finite-difference step sizes violate the stability bound.
    #[error("CFL condition violated: dt = {dt:.3e} exceeds {dt_max:.3e}; use at least {suggested_t_steps} time steps")]
    Cfl {
        dt: f64,
        dt_max: f64,
        suggested_t_steps: usize,
    },

    /// A non-finite value appeared during a PDE sweep.
    #[error("non-finite value at time step {t_index}, node {x_index} (x = {x})")]
    NonFinite { t_index: usize, x_index: usize, x: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. } | Error::Unsupported(_))
    }
}
