//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by operators, decompositions, solvers and generators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error(
        "eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})"
    )]
    EigenNoConvergence { sweeps: usize, off: f64 },

    #[error("Cholesky factorization failed at pivot {pivot} (value {value:.3e}); the shifted normal matrix should be positive definite")]
    FactorizationFailure { pivot: usize, value: f64 },

    #[error("regularized solve residual {achieved:.3e} exceeds the required bound {required:.3e}")]
    ResidualBound { achieved: f64, required: f64 },

    #[error("data has a component of norm {outside:.3e} outside the operator range (tolerance {tolerance:.3e})")]
    RangeInconsistent { outside: f64, tolerance: f64 },

    #[error("root not bracketed on [{lo:.6e}, {hi:.6e}]: {context}")]
    BracketFailure { lo: f64, hi: f64, context: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("approximate minimizer failed certification: measured objective gap {gap:.6e} exceeds allowance {allowance:.6e}")]
    Certification { gap: f64, allowance: f64 },

    #[error("integrator instability at t={t:.6e}: state norm {norm:.3e} exceeded guard {guard:.3e}; reduce the step size")]
    Instability { norm: f64, guard: f64, t: f64 },

    #[error("no crossing found within {n_max} iterations; final gap {gap:.3e}")]
    NoCrossing { n_max: usize, gap: f64 },

    #[error("quadrature did not reach tolerance {requested:.3e} (achieved {achieved:.3e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("problem file: {0}")]
    ProblemFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
