//! Solvers and parameter-choice rules for linear ill-posed equations
//! A u = f with noisy data f_δ, ‖f_δ − f‖ ≤ δ.
//!
//! The crate provides, over finite-dimensional real operators:
//!
//! * [`operators`] — dense/diagonal/symmetric operators, adjoints,
//!   regularized normal-equation solves (direct and conjugate-gradient
//!   backends), and the reduction of a general problem to a selfadjoint
//!   one.
//! * [`spectral`] — eigendecompositions of AᵀA and AAᵀ with the
//!   closed-form quantities built on them: spectral filters, the
//!   regularization bias η(a), the discrepancy function h(a, δ), exact
//!   norm bounds, and the minimal-norm solution.
//! * [`variational`] — Tikhonov regularization with a-priori,
//!   discrepancy-principle, and certified approximate-minimizer
//!   parameter choices.
//! * [`dsm`] — three dynamical-flow solvers with spectral closed forms,
//!   fixed-step validation integrators, stopping schedules, and a
//!   discrepancy stopping rule.
//! * [`iterative`] — the stationary iteration with spectral error decay
//!   and two noise-aware stopping rules.
//! * [`problems`] — seeded benchmark generators, exactly calibrated
//!   noise, and the non-uniform-convergence counterexample.
//!
//! Everything is pure and deterministic: seeded generators, immutable
//! values, and no interior mutability, so problems, models and reports
//! can be shared freely across concurrent experiment runs.

// negated comparisons like `!(a > 0.0)` are deliberate: they reject NaN
// along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod linalg;

pub mod dsm;
pub mod iterative;
pub mod operators;
pub mod problems;
pub mod spectral;
pub mod variational;

pub use error::{Error, Result};
pub use operators::{
    solve_regularized, solve_shifted_selfadjoint, ForwardProblem, LinearOperator, NoisyData,
    RegularizedSolver, SolveBackend, SolveOptions,
};
pub use problems::{Family, ProblemSpec};
pub use spectral::{ProblemModels, SpectralModel};
pub use variational::{DiscrepancyConfig, MethodTag, SolveReport};
