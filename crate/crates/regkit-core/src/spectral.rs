//! Spectral decompositions of the normal operators T = AᵀA and Q = AAᵀ,
//! plus the closed-form quantities built on them: spectral filters, the
//! regularization bias η(a), the discrepancy function h(a, δ), exact
//! operator-norm values, and the minimal-norm solution.
//!
//! Eigenvalues below `NULL_CLAMP_RTOL` times the largest one are treated
//! as exactly zero; those modes form the numerical null space N. Spectral
//! sums run in descending-magnitude order with compensated summation.

use crate::error::{Error, Result};
use crate::linalg::{self, jacobi_eigen, spectral_sum};
use crate::operators::LinearOperator;

/// Eigenvalues smaller than this times the spectral radius count as zero.
pub const NULL_CLAMP_RTOL: f64 = 1e-12;

/// Eigendecomposition of a positive semidefinite selfadjoint operator.
///
/// `eigenvalues` are nonincreasing and clamped at zero; `basis` stores
/// the orthonormal eigenvectors column-major, column k belonging to
/// eigenvalue k. An optional coefficient cache can hold ⟨v, e_k⟩ for one
/// distinguished data vector.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    eigenvalues: Vec<f64>,
    basis: Vec<f64>,
    dim: usize,
    data_coeffs: Option<Vec<f64>>,
}

impl SpectralModel {
    /// Assembles a model from raw eigenpairs, optionally squaring the
    /// values first (used to turn the spectrum of a symmetric A into the
    /// spectrum of T = A²). Values are clamped and sorted nonincreasing.
    fn from_raw(mut values: Vec<f64>, vectors: Vec<f64>, dim: usize, square: bool) -> Result<Self> {
        if square {
            for v in values.iter_mut() {
                *v *= *v;
            }
        }
        let s_max = values.iter().cloned().fold(0.0, f64::max);
        let clamp = NULL_CLAMP_RTOL * s_max;
        for v in values.iter_mut() {
            if *v < -clamp {
                return Err(Error::Precondition(format!(
                    "operator is not positive semidefinite: eigenvalue {v:.6e}"
                )));
            }
            if *v < clamp {
                *v = 0.0;
            }
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        let mut basis = vec![0.0; dim * dim];
        for (k, &src) in order.iter().enumerate() {
            basis[k * dim..(k + 1) * dim].copy_from_slice(&vectors[src * dim..(src + 1) * dim]);
        }
        Ok(Self {
            eigenvalues,
            basis,
            dim,
            data_coeffs: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn basis_column(&self, k: usize) -> &[f64] {
        &self.basis[k * self.dim..(k + 1) * self.dim]
    }

    /// Number of (clamped) zero eigenvalues, i.e. dim N.
    pub fn null_dimension(&self) -> usize {
        self.eigenvalues.iter().filter(|&&s| s == 0.0).count()
    }

    /// Coefficients c_k = ⟨v, e_k⟩ of a vector in the eigenbasis.
    pub fn coefficients(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "spectral coefficients",
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|k| linalg::dot(self.basis_column(k), v))
            .collect())
    }

    /// Σ c_k e_k.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                linalg::axpy(&mut out, c, self.basis_column(k));
            }
        }
        out
    }

    /// Orthogonal projection onto the null space.
    pub fn project_null(&self, v: &[f64]) -> Result<Vec<f64>> {
        let coeffs = self.coefficients(v)?;
        let mut out = vec![0.0; self.dim];
        for (k, (&s, &c)) in self.eigenvalues.iter().zip(&coeffs).enumerate() {
            if s == 0.0 && c != 0.0 {
                linalg::axpy(&mut out, c, self.basis_column(k));
            }
        }
        Ok(out)
    }

    /// Caches the coefficients of one data vector for repeated filter
    /// evaluations (root finding evaluates h at many parameters).
    pub fn cache_data_coeffs(&mut self, v: &[f64]) -> Result<()> {
        self.data_coeffs = Some(self.coefficients(v)?);
        Ok(())
    }

    pub fn cached_data_coeffs(&self) -> Option<&[f64]> {
        self.data_coeffs.as_deref()
    }
}

fn symmetric_raw_eigen(entries: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    jacobi_eigen(entries, n)
}

/// Spectral model of T = AᵀA for any operator kind. For a diagonal
/// operator the eigenvalues are the squared diagonal entries; for a
/// symmetric operator the squared eigenvalues of the operator itself.
pub fn decompose(op: &LinearOperator) -> Result<SpectralModel> {
    match op {
        LinearOperator::Diagonal { diag } => diagonal_model(diag, true),
        LinearOperator::Symmetric { n, entries } => {
            let (values, vectors) = symmetric_raw_eigen(entries, *n)?;
            SpectralModel::from_raw(values, vectors, *n, true)
        }
        LinearOperator::Dense { cols, .. } => {
            let t = op.gram();
            let (n, entries) = match &t {
                LinearOperator::Symmetric { n, entries } => (*n, entries),
                _ => unreachable!(),
            };
            debug_assert_eq!(n, *cols);
            let (values, vectors) = symmetric_raw_eigen(entries, n)?;
            SpectralModel::from_raw(values, vectors, n, false)
        }
    }
}

/// Spectral model of Q = AAᵀ, the data-space normal operator used by the
/// discrepancy function. Coincides with `decompose` for square
/// selfadjoint operators, so one decomposition is reused there.
pub fn decompose_data_gram(op: &LinearOperator) -> Result<SpectralModel> {
    match op {
        LinearOperator::Dense { rows, .. } => {
            let q = op.data_gram();
            let (m, entries) = match &q {
                LinearOperator::Symmetric { n, entries } => (*n, entries),
                _ => unreachable!(),
            };
            debug_assert_eq!(m, *rows);
            let (values, vectors) = symmetric_raw_eigen(entries, m)?;
            SpectralModel::from_raw(values, vectors, m, false)
        }
        _ => decompose(op),
    }
}

/// Spectral model of a positive semidefinite selfadjoint operator
/// itself (no squaring). This is the flow operator model for the
/// dynamical solvers when the problem operator is already selfadjoint.
/// Errors on dense non-symmetric operators and on significantly
/// negative spectra.
pub fn decompose_selfadjoint(op: &LinearOperator) -> Result<SpectralModel> {
    match op {
        LinearOperator::Diagonal { diag } => diagonal_model(diag, false),
        LinearOperator::Symmetric { n, entries } => {
            let (values, vectors) = symmetric_raw_eigen(entries, *n)?;
            SpectralModel::from_raw(values, vectors, *n, false)
        }
        LinearOperator::Dense { .. } => Err(Error::Precondition(
            "selfadjoint model requires a diagonal or symmetric operator; reduce first".into(),
        )),
    }
}

fn diagonal_model(diag: &[f64], square: bool) -> Result<SpectralModel> {
    let n = diag.len();
    let values: Vec<f64> = diag.to_vec();
    let mut vectors = vec![0.0; n * n];
    for k in 0..n {
        vectors[k * n + k] = 1.0;
    }
    SpectralModel::from_raw(values, vectors, n, square)
}

/// Decompositions a solver needs for one problem, built once and shared.
///
/// `gram` models T = AᵀA, `data_gram` models Q = AAᵀ, and `flow` is the
/// direct model of A itself when A is selfadjoint positive semidefinite
/// (the dynamical solvers then run on A directly; otherwise they run on
/// the reduced operator T).
#[derive(Debug, Clone)]
pub struct ProblemModels {
    gram: SpectralModel,
    data_gram: Option<SpectralModel>,
    flow: Option<SpectralModel>,
}

impl ProblemModels {
    pub fn build(op: &LinearOperator) -> Result<Self> {
        if op.is_selfadjoint() {
            match decompose_selfadjoint(op) {
                Ok(flow) => {
                    // same eigenbasis, squared eigenvalues, same clamping rule
                    let gram = SpectralModel::from_raw(
                        flow.eigenvalues.clone(),
                        flow.basis.clone(),
                        flow.dim,
                        true,
                    )?;
                    return Ok(Self {
                        gram,
                        data_gram: None,
                        flow: Some(flow),
                    });
                }
                Err(Error::Precondition(_)) => {
                    // indefinite symmetric operator: fall back to the reduced form
                }
                Err(e) => return Err(e),
            }
        }
        let gram = decompose(op)?;
        let data_gram = if op.is_selfadjoint() {
            None
        } else {
            Some(decompose_data_gram(op)?)
        };
        Ok(Self {
            gram,
            data_gram,
            flow: None,
        })
    }

    /// Model of T = AᵀA.
    pub fn gram(&self) -> &SpectralModel {
        &self.gram
    }

    /// Model of Q = AAᵀ (same as `gram` for square selfadjoint operators).
    pub fn data_gram(&self) -> &SpectralModel {
        self.data_gram.as_ref().unwrap_or(&self.gram)
    }

    /// Direct model of A when the dynamical flows can run on A itself.
    pub fn flow(&self) -> Option<&SpectralModel> {
        self.flow.as_ref()
    }

    /// ‖A‖ = √(largest eigenvalue of T).
    pub fn operator_norm(&self) -> f64 {
        self.gram.max_eigenvalue().sqrt()
    }
}

/// Minimal-norm solution of A y = f: the solution orthogonal to the null
/// space, assembled as Σ_{s_k>0} ⟨Aᵀf, e_k⟩ / s_k · e_k over the T-model.
///
/// Reports an inconsistency when f has a component outside the range of
/// A exceeding `1e-8 · ‖f‖`.
pub fn minimal_norm_solution(
    model: &SpectralModel,
    op: &LinearOperator,
    f: &[f64],
) -> Result<Vec<f64>> {
    let g = op.apply_adjoint(f)?;
    let coeffs = model.coefficients(&g)?;
    let mut y_coeffs = vec![0.0; coeffs.len()];
    for (k, (&s, &c)) in model.eigenvalues().iter().zip(&coeffs).enumerate() {
        if s > 0.0 {
            y_coeffs[k] = c / s;
        }
    }
    let y = model.synthesize(&y_coeffs);
    let f_norm = linalg::norm(f);
    let residual = linalg::norm(&linalg::sub(&op.apply(&y)?, f));
    let tolerance = 1e-8 * f_norm;
    if residual > tolerance {
        return Err(Error::RangeInconsistent {
            outside: residual,
            tolerance,
        });
    }
    Ok(y)
}

/// Regularization bias η(a) = ‖(T + aI)⁻¹ T y − y‖, evaluated spectrally
/// as √( Σ_k (a/(s_k+a))² ⟨y,e_k⟩² ). For y orthogonal to the null space
/// it vanishes as a → 0; in general it tends to ‖P_N y‖.
pub fn regularization_bias(model: &SpectralModel, y: &[f64], a: f64) -> Result<f64> {
    require_positive_a(a)?;
    let coeffs = model.coefficients(y)?;
    let terms: Vec<f64> = model
        .eigenvalues()
        .iter()
        .zip(&coeffs)
        .map(|(&s, &c)| {
            let filter = a / (s + a);
            filter * filter * c * c
        })
        .collect();
    Ok(spectral_sum(terms).sqrt())
}

/// Discrepancy function h(a, δ) = Σ_k (a/(q_k+a))² ⟨f_δ, e_k⟩² over the
/// Q-model: the squared residual of the regularized solution. Strictly
/// increasing in a, with h(∞) = ‖f_δ‖² and h(+0) = ‖P_{N*} f_δ‖².
pub fn discrepancy_function(model_q: &SpectralModel, f_delta: &[f64], a: f64) -> Result<f64> {
    require_positive_a(a)?;
    match model_q.cached_data_coeffs() {
        Some(coeffs) => Ok(discrepancy_function_from_coeffs(
            model_q.eigenvalues(),
            coeffs,
            a,
        )),
        None => {
            let coeffs = model_q.coefficients(f_delta)?;
            Ok(discrepancy_function_from_coeffs(
                model_q.eigenvalues(),
                &coeffs,
                a,
            ))
        }
    }
}

/// Fast path for root finding: h evaluated from precomputed coefficients.
pub fn discrepancy_function_from_coeffs(eigenvalues: &[f64], coeffs: &[f64], a: f64) -> f64 {
    let terms: Vec<f64> = eigenvalues
        .iter()
        .zip(coeffs)
        .map(|(&q, &c)| {
            let filter = a / (q + a);
            filter * filter * c * c
        })
        .collect();
    spectral_sum(terms)
}

/// Exact operator norm of the Tikhonov solution map f ↦ (T+aI)⁻¹Aᵀf for
/// this spectrum: max_k √s_k / (s_k + a). Always at most 1/(2√a), with
/// equality when s = a lies in the spectrum.
pub fn solution_operator_norm(model: &SpectralModel, a: f64) -> Result<f64> {
    require_positive_a(a)?;
    Ok(model
        .eigenvalues()
        .iter()
        .map(|&s| s.sqrt() / (s + a))
        .fold(0.0, f64::max))
}

fn require_positive_a(a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonPositive {
            what: "regularization parameter a",
            value: a,
        });
    }
    Ok(())
}
