use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the domain: {0}")]
    Domain(&'static str),

    #[error("point on or too close to the vertical axis (z = 0)")]
    DegenerateAxis,

    #[error("invalid grid: n = {n}, size = {size}")]
    InvalidGrid { n: usize, size: usize },

    #[error("quotient denominator vanishes")]
    ZeroDenominator,

    #[error("quotient minimisation did not converge after {iterations} iterations (last quotient {})", history.last().copied().unwrap_or(f64::NAN))]
    NonConvergence {
        iterations: usize,
        history: Vec<f64>,
        last_iterate: Vec<f64>,
    },

    #[error("Newton Jacobian is singular at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("Newton residual stopped decreasing at iteration {iteration} (residual {residual:e})")]
    ResidualStagnation { iteration: usize, residual: f64 },

    #[error("Lagrange multiplier is not positive ({0:e})")]
    NonpositiveMultiplier(f64),

    #[error("calibration ratio not constant: relative spread {spread:e} exceeds {limit:e}")]
    RatioSpread { spread: f64, limit: f64 },

    #[error("second variation disagrees with finite differences: relative mismatch {mismatch:e}")]
    FdMismatch { mismatch: f64 },

    #[error("axial coupling matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("crossing verification failed for m = {m}, j = {j}: {reason}")]
    CrossingVerification { m: usize, j: usize, reason: String },
}
