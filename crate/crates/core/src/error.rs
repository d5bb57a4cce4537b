use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("packing infeasible: failed to place spin {placed} of {requested} after {attempts} attempts (density too high for r_cut = {r_cut} nm)")]
    PackingInfeasible {
        placed: usize,
        requested: usize,
        attempts: usize,
        r_cut: f64,
    },

    #[error("coincident positions: |r_i - r_j| = 0")]
    CoincidentPositions,

    #[error("integrator failure at t = {t} us (step {step:.3e} us below floor, tol {tol:.1e})")]
    IntegratorFailure { t: f64, step: f64, tol: f64 },

    #[error("system size {n} exceeds the dense-solver cap {cap}; use the random-walk engine instead")]
    SizeCapExceeded { n: usize, cap: usize },

    #[error("fit did not converge after {iterations} iterations (chi2 = {chi2:.6e})")]
    NonConvergence { iterations: usize, chi2: f64 },

    #[error("no valid fit window: {0}")]
    NoValidWindow(String),

    #[error("integral does not converge: {0}")]
    DivergentIntegral(String),

    #[error("Hilbert-space dimension {dim} exceeds the cluster cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
