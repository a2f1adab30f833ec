//! Operator abstraction: dense, diagonal and symmetric real matrices,
//! adjoints, regularized normal-equation solves, and the reduction of a
//! general problem to an equivalent selfadjoint one.
//!
//! All vectors and matrices are `f64`. Operators are immutable after
//! construction and every operation here is pure, so values can be
//! shared freely across concurrent experiment runs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};

/// Relative residual bound every regularized solve must meet.
pub const SOLVE_RESIDUAL_RTOL: f64 = 1e-10;

/// Consistency tolerance for `ForwardProblem`: ‖A y − f‖ ≤ tol · max(1, ‖f‖).
pub const PROBLEM_CONSISTENCY_RTOL: f64 = 1e-12;

/// Null-space orthogonality tolerance for exact solutions: ‖P_N y‖ ≤ tol · ‖y‖.
pub const NULL_ORTHOGONALITY_RTOL: f64 = 1e-10;

/// A real linear operator between finite-dimensional spaces.
///
/// Three storage kinds are supported: a general dense m×n matrix
/// (row-major), a diagonal square matrix, and a dense symmetric matrix
/// whose storage is exactly symmetric entry by entry.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOperator {
    Dense {
        rows: usize,
        cols: usize,
        entries: Vec<f64>,
    },
    Diagonal {
        diag: Vec<f64>,
    },
    Symmetric {
        n: usize,
        entries: Vec<f64>,
    },
}

fn check_finite(entries: &[f64]) -> Result<()> {
    for (index, x) in entries.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(())
}

impl LinearOperator {
    pub fn dense(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::InvalidConfig(format!(
                "dense operator needs rows*cols = {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        check_finite(&entries)?;
        Ok(Self::Dense {
            rows,
            cols,
            entries,
        })
    }

    pub fn diagonal(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidConfig("empty diagonal".into()));
        }
        check_finite(&diag)?;
        Ok(Self::Diagonal { diag })
    }

    pub fn symmetric(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::InvalidConfig(format!(
                "symmetric operator needs n*n = {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        check_finite(&entries)?;
        for i in 0..n {
            for j in (i + 1)..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::InvalidConfig(format!(
                        "symmetric storage violated at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self::Symmetric { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        Self::Diagonal { diag: vec![1.0; n] }
    }

    pub fn rows(&self) -> usize {
        match self {
            Self::Dense { rows, .. } => *rows,
            Self::Diagonal { diag } => diag.len(),
            Self::Symmetric { n, .. } => *n,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Self::Dense { cols, .. } => *cols,
            Self::Diagonal { diag } => diag.len(),
            Self::Symmetric { n, .. } => *n,
        }
    }

    /// Diagonal and symmetric kinds coincide with their adjoints.
    pub fn is_selfadjoint(&self) -> bool {
        !matches!(self, Self::Dense { .. })
    }

    /// A u.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                context: "apply",
                expected: self.cols(),
                actual: u.len(),
            });
        }
        Ok(match self {
            Self::Dense {
                rows,
                cols,
                entries,
            } => {
                let mut out = vec![0.0; *rows];
                for i in 0..*rows {
                    out[i] = linalg::dot(&entries[i * cols..(i + 1) * cols], u);
                }
                out
            }
            Self::Diagonal { diag } => diag.iter().zip(u).map(|(d, x)| d * x).collect(),
            Self::Symmetric { n, entries } => {
                let mut out = vec![0.0; *n];
                for i in 0..*n {
                    out[i] = linalg::dot(&entries[i * n..(i + 1) * n], u);
                }
                out
            }
        })
    }

    /// Aᵀ v. Identical to `apply` for the selfadjoint kinds.
    pub fn apply_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                context: "apply_adjoint",
                expected: self.rows(),
                actual: v.len(),
            });
        }
        match self {
            Self::Dense {
                rows,
                cols,
                entries,
            } => {
                let mut out = vec![0.0; *cols];
                for i in 0..*rows {
                    linalg::axpy(&mut out, v[i], &entries[i * cols..(i + 1) * cols]);
                }
                Ok(out)
            }
            _ => self.apply(v),
        }
    }

    /// Apply to a complex vector (componentwise on real and imaginary parts).
    pub fn apply_complex(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        let re: Vec<f64> = u.iter().map(|z| z.re).collect();
        let im: Vec<f64> = u.iter().map(|z| z.im).collect();
        let are = self.apply(&re)?;
        let aim = self.apply(&im)?;
        Ok(are
            .into_iter()
            .zip(aim)
            .map(|(r, i)| Complex64::new(r, i))
            .collect())
    }

    /// The normal operator T = AᵀA. Diagonal operators stay diagonal,
    /// everything else becomes a symmetric dense matrix.
    pub fn gram(&self) -> LinearOperator {
        match self {
            Self::Diagonal { diag } => Self::Diagonal {
                diag: diag.iter().map(|d| d * d).collect(),
            },
            Self::Dense {
                rows,
                cols,
                entries,
            } => {
                let (m, n) = (*rows, *cols);
                let mut t = vec![0.0; n * n];
                for p in 0..n {
                    for q in p..n {
                        let mut s = 0.0;
                        for i in 0..m {
                            s += entries[i * n + p] * entries[i * n + q];
                        }
                        t[p * n + q] = s;
                        t[q * n + p] = s;
                    }
                }
                Self::Symmetric { n, entries: t }
            }
            Self::Symmetric { n, entries } => {
                let n = *n;
                let mut t = vec![0.0; n * n];
                for p in 0..n {
                    for q in p..n {
                        let mut s = 0.0;
                        for i in 0..n {
                            s += entries[i * n + p] * entries[i * n + q];
                        }
                        t[p * n + q] = s;
                        t[q * n + p] = s;
                    }
                }
                Self::Symmetric { n, entries: t }
            }
        }
    }

    /// The data-space normal operator Q = AAᵀ.
    pub fn data_gram(&self) -> LinearOperator {
        match self {
            Self::Dense {
                rows,
                cols,
                entries,
            } => {
                let (m, n) = (*rows, *cols);
                let mut q = vec![0.0; m * m];
                for p in 0..m {
                    for r in p..m {
                        let s =
                            linalg::dot(&entries[p * n..(p + 1) * n], &entries[r * n..(r + 1) * n]);
                        q[p * m + r] = s;
                        q[r * m + p] = s;
                    }
                }
                Self::Symmetric { n: m, entries: q }
            }
            _ => self.gram(),
        }
    }

    /// Row-major dense copy of T_a = AᵀA + aI.
    fn shifted_gram_matrix(&self, a: f64) -> (Vec<f64>, usize) {
        let n = self.cols();
        let mut t = match self.gram() {
            Self::Symmetric { entries, .. } => entries,
            Self::Diagonal { diag } => {
                let mut m = vec![0.0; n * n];
                for (k, d) in diag.iter().enumerate() {
                    m[k * n + k] = *d;
                }
                m
            }
            Self::Dense { .. } => unreachable!("gram is never dense"),
        };
        for k in 0..n {
            t[k * n + k] += a;
        }
        (t, n)
    }

    /// T_a x = Aᵀ(A x) + a x without forming T_a.
    fn shifted_gram_apply(&self, a: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.apply_adjoint(&self.apply(x)?)?;
        linalg::axpy(&mut y, a, x);
        Ok(y)
    }
}

/// Which backend `solve_regularized_with` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveBackend {
    /// Pick by problem size: direct below `dense_threshold` columns.
    Auto,
    /// Cholesky factorization of T_a with iterative refinement.
    Direct,
    /// Matrix-free conjugate gradients on T_a.
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub backend: SolveBackend,
    /// Column count below which `Auto` prefers the direct factorization.
    pub dense_threshold: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            backend: SolveBackend::Auto,
            dense_threshold: 2000,
        }
    }
}

/// A factored T_a = AᵀA + aI ready to solve many right-hand sides.
///
/// Solutions are refined until ‖T_a u − rhs‖ ≤ `SOLVE_RESIDUAL_RTOL`·‖rhs‖;
/// failure to reach the bound is an error, not a silent return.
pub struct RegularizedSolver {
    a: f64,
    kind: SolverKind,
}

enum SolverKind {
    Diagonal {
        shifted: Vec<f64>,
    },
    Direct {
        chol: Cholesky,
        t_a: Vec<f64>,
        n: usize,
    },
}

impl RegularizedSolver {
    pub fn new(op: &LinearOperator, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::NonPositive {
                what: "regularization parameter a",
                value: a,
            });
        }
        let kind = match op {
            LinearOperator::Diagonal { diag } => SolverKind::Diagonal {
                shifted: diag.iter().map(|d| d * d + a).collect(),
            },
            _ => {
                let (t_a, n) = op.shifted_gram_matrix(a);
                let chol = Cholesky::factor(&t_a, n)?;
                SolverKind::Direct { chol, t_a, n }
            }
        };
        Ok(Self { a, kind })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            SolverKind::Diagonal { shifted } => {
                if rhs.len() != shifted.len() {
                    return Err(Error::DimensionMismatch {
                        context: "solve_regularized",
                        expected: shifted.len(),
                        actual: rhs.len(),
                    });
                }
                Ok(rhs.iter().zip(shifted).map(|(r, t)| r / t).collect())
            }
            SolverKind::Direct { chol, t_a, n } => {
                if rhs.len() != *n {
                    return Err(Error::DimensionMismatch {
                        context: "solve_regularized",
                        expected: *n,
                        actual: rhs.len(),
                    });
                }
                spd_solve_refined(chol, t_a, *n, rhs)
            }
        }
    }
}

/// Cholesky solve followed by iterative refinement against the stored
/// matrix until the residual contract holds.
fn spd_solve_refined(chol: &Cholesky, matrix: &[f64], n: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    let rhs_norm = linalg::norm(rhs);
    if rhs_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut u = chol.solve(rhs);
    let bound = SOLVE_RESIDUAL_RTOL * rhs_norm;
    for _ in 0..5 {
        let residual = residual_vec(matrix, n, &u, rhs);
        let res_norm = linalg::norm(&residual);
        if res_norm <= bound {
            return Ok(u);
        }
        let corr = chol.solve(&residual);
        linalg::axpy(&mut u, 1.0, &corr);
    }
    let res_norm = linalg::norm(&residual_vec(matrix, n, &u, rhs));
    if res_norm <= bound {
        Ok(u)
    } else {
        Err(Error::ResidualBound {
            achieved: res_norm,
            required: bound,
        })
    }
}

fn residual_vec(t_a: &[f64], n: usize, u: &[f64], rhs: &[f64]) -> Vec<f64> {
    let mut r = rhs.to_vec();
    for i in 0..n {
        r[i] -= linalg::dot(&t_a[i * n..(i + 1) * n], u);
    }
    r
}

/// Solve (S + aI) x = rhs for a selfadjoint positive semidefinite
/// operator S given directly (diagonal or symmetric kind) — the
/// data-space companion of `solve_regularized`, e.g. (AAᵀ + aI)⁻¹ with
/// S = AAᵀ already formed. Same residual contract.
pub fn solve_shifted_selfadjoint(op: &LinearOperator, a: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(Error::NonPositive {
            what: "shift a",
            value: a,
        });
    }
    match op {
        LinearOperator::Diagonal { diag } => {
            if rhs.len() != diag.len() {
                return Err(Error::DimensionMismatch {
                    context: "solve_shifted_selfadjoint",
                    expected: diag.len(),
                    actual: rhs.len(),
                });
            }
            diag.iter()
                .zip(rhs)
                .enumerate()
                .map(|(k, (&d, &r))| {
                    let shifted = d + a;
                    if shifted <= 0.0 {
                        Err(Error::FactorizationFailure {
                            pivot: k,
                            value: shifted,
                        })
                    } else {
                        Ok(r / shifted)
                    }
                })
                .collect()
        }
        LinearOperator::Symmetric { n, entries } => {
            if rhs.len() != *n {
                return Err(Error::DimensionMismatch {
                    context: "solve_shifted_selfadjoint",
                    expected: *n,
                    actual: rhs.len(),
                });
            }
            let mut shifted = entries.clone();
            for k in 0..*n {
                shifted[k * n + k] += a;
            }
            let chol = Cholesky::factor(&shifted, *n)?;
            spd_solve_refined(&chol, &shifted, *n, rhs)
        }
        LinearOperator::Dense { .. } => Err(Error::Precondition(
            "shifted solve requires a selfadjoint operator kind".into(),
        )),
    }
}

/// Solve (AᵀA + aI) u = rhs with the default backend policy.
pub fn solve_regularized(op: &LinearOperator, a: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    solve_regularized_with(op, a, rhs, &SolveOptions::default())
}

pub fn solve_regularized_with(
    op: &LinearOperator,
    a: f64,
    rhs: &[f64],
    options: &SolveOptions,
) -> Result<Vec<f64>> {
    let direct = match options.backend {
        SolveBackend::Direct => true,
        SolveBackend::ConjugateGradient => false,
        SolveBackend::Auto => op.cols() < options.dense_threshold,
    };
    if direct || matches!(op, LinearOperator::Diagonal { .. }) {
        RegularizedSolver::new(op, a)?.solve(rhs)
    } else {
        solve_regularized_cg(op, a, rhs).map(|(u, _)| u)
    }
}

/// Conjugate-gradient backend on the (SPD) shifted normal operator,
/// iterated until the same residual bound as the direct path holds.
/// Returns the solution and the iteration count.
pub fn solve_regularized_cg(op: &LinearOperator, a: f64, rhs: &[f64]) -> Result<(Vec<f64>, usize)> {
    if !(a > 0.0) {
        return Err(Error::NonPositive {
            what: "regularization parameter a",
            value: a,
        });
    }
    let n = op.cols();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_regularized_cg",
            expected: n,
            actual: rhs.len(),
        });
    }
    let rhs_norm = linalg::norm(rhs);
    if rhs_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let bound = SOLVE_RESIDUAL_RTOL * rhs_norm;
    let mut u = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rho = linalg::dot(&r, &r);
    let max_iter = 20 * n + 200;
    for iter in 1..=max_iter {
        let ap = op.shifted_gram_apply(a, &p)?;
        let alpha = rho / linalg::dot(&p, &ap);
        linalg::axpy(&mut u, alpha, &p);
        linalg::axpy(&mut r, -alpha, &ap);
        let rho_next = linalg::dot(&r, &r);
        if rho_next.sqrt() <= 0.25 * bound {
            // verify against the true residual, not the recurrence
            let mut true_res = rhs.to_vec();
            let tu = op.shifted_gram_apply(a, &u)?;
            linalg::axpy(&mut true_res, -1.0, &tu);
            let tr = linalg::norm(&true_res);
            if tr <= bound {
                return Ok((u, iter));
            }
            r = true_res;
            rho = linalg::dot(&r, &r);
            p = r.clone();
            continue;
        }
        let beta = rho_next / rho;
        rho = rho_next;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(Error::ResidualBound {
        achieved: linalg::norm(&r),
        required: bound,
    })
}

/// A test problem A u = f with a known minimal-norm solution.
#[derive(Debug, Clone)]
pub struct ForwardProblem {
    operator: LinearOperator,
    exact_solution: Vec<f64>,
    exact_data: Vec<f64>,
    null_dim: usize,
}

impl ForwardProblem {
    /// Builds a problem and checks its consistency invariant
    /// ‖A y − f‖ ≤ 1e−12 · max(1, ‖f‖). For declared rank-deficient
    /// problems (`null_dim > 0`) the null-space structure is verified
    /// spectrally: the zero-eigenvalue count must match and the exact
    /// solution must be orthogonal to the null space.
    pub fn new(
        operator: LinearOperator,
        exact_solution: Vec<f64>,
        exact_data: Vec<f64>,
        null_dim: usize,
    ) -> Result<Self> {
        if exact_solution.len() != operator.cols() {
            return Err(Error::DimensionMismatch {
                context: "exact_solution",
                expected: operator.cols(),
                actual: exact_solution.len(),
            });
        }
        if exact_data.len() != operator.rows() {
            return Err(Error::DimensionMismatch {
                context: "exact_data",
                expected: operator.rows(),
                actual: exact_data.len(),
            });
        }
        let residual = linalg::sub(&operator.apply(&exact_solution)?, &exact_data);
        let tol = PROBLEM_CONSISTENCY_RTOL * linalg::norm(&exact_data).max(1.0);
        let res_norm = linalg::norm(&residual);
        if res_norm > tol {
            return Err(Error::ProblemFile(format!(
                "exact data inconsistent with exact solution: ‖Ay−f‖ = {res_norm:.3e} > {tol:.3e}"
            )));
        }
        let problem = Self {
            operator,
            exact_solution,
            exact_data,
            null_dim,
        };
        if null_dim > 0 {
            problem.check_null_structure()?;
        }
        Ok(problem)
    }

    fn check_null_structure(&self) -> Result<()> {
        let model = crate::spectral::decompose(&self.operator)?;
        if model.null_dimension() != self.null_dim {
            return Err(Error::ProblemFile(format!(
                "declared null dimension {} but spectral null dimension is {}",
                self.null_dim,
                model.null_dimension()
            )));
        }
        let py = model.project_null(&self.exact_solution)?;
        let y_norm = linalg::norm(&self.exact_solution);
        if linalg::norm(&py) > NULL_ORTHOGONALITY_RTOL * y_norm.max(f64::MIN_POSITIVE) {
            return Err(Error::ProblemFile(format!(
                "exact solution has a null-space component of norm {:.3e}",
                linalg::norm(&py)
            )));
        }
        Ok(())
    }

    pub fn operator(&self) -> &LinearOperator {
        &self.operator
    }

    pub fn exact_solution(&self) -> &[f64] {
        &self.exact_solution
    }

    pub fn exact_data(&self) -> &[f64] {
        &self.exact_data
    }

    pub fn null_dim(&self) -> usize {
        self.null_dim
    }

    /// Equivalent selfadjoint problem: T u = Aᵀ f with T = AᵀA. The exact
    /// solution is unchanged; any solution of the original equation solves
    /// the reduced one and vice versa on the range.
    pub fn reduce_to_selfadjoint(&self) -> Result<ForwardProblem> {
        let t = self.operator.gram();
        let data = self.operator.apply_adjoint(&self.exact_data)?;
        ForwardProblem::new(t, self.exact_solution.clone(), data, self.null_dim)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProblemFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.into_problem()
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Perturbed data f_δ together with its certified noise level δ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoisyData {
    data: Vec<f64>,
    delta: f64,
    seed: u64,
}

impl NoisyData {
    pub fn new(data: Vec<f64>, delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidConfig(format!("noise level {delta} invalid")));
        }
        check_finite(&data)?;
        Ok(Self { data, delta, seed })
    }

    /// Exact data: δ = 0, seed 0.
    pub fn exact(data: &[f64]) -> Self {
        Self {
            data: data.to_vec(),
            delta: 0.0,
            seed: 0,
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Flat on-disk schema for problem files. Decimal serialization uses the
/// shortest representation that round-trips to the identical `f64`, so a
/// save/load cycle is bit-exact.
#[derive(Serialize, Deserialize)]
struct ProblemFile {
    kind: String,
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    exact_solution: Vec<f64>,
    exact_data: Vec<f64>,
    null_dim: usize,
}

impl From<&ForwardProblem> for ProblemFile {
    fn from(p: &ForwardProblem) -> Self {
        let (kind, rows, cols, entries) = match &p.operator {
            LinearOperator::Dense {
                rows,
                cols,
                entries,
            } => ("dense", *rows, *cols, entries.clone()),
            LinearOperator::Diagonal { diag } => ("diagonal", diag.len(), diag.len(), diag.clone()),
            LinearOperator::Symmetric { n, entries } => ("symmetric", *n, *n, entries.clone()),
        };
        Self {
            kind: kind.to_string(),
            rows,
            cols,
            entries,
            exact_solution: p.exact_solution.clone(),
            exact_data: p.exact_data.clone(),
            null_dim: p.null_dim,
        }
    }
}

impl ProblemFile {
    fn into_problem(self) -> Result<ForwardProblem> {
        let operator = match self.kind.as_str() {
            "dense" => LinearOperator::dense(self.rows, self.cols, self.entries)?,
            "diagonal" => {
                if self.rows != self.cols {
                    return Err(Error::ProblemFile(
                        "diagonal operator requires rows = cols".into(),
                    ));
                }
                if self.entries.len() != self.rows {
                    return Err(Error::ProblemFile(format!(
                        "diagonal operator expects {} entries, got {}",
                        self.rows,
                        self.entries.len()
                    )));
                }
                LinearOperator::diagonal(self.entries)?
            }
            "symmetric" => {
                if self.rows != self.cols {
                    return Err(Error::ProblemFile(
                        "symmetric operator requires rows = cols".into(),
                    ));
                }
                LinearOperator::symmetric(self.rows, self.entries)?
            }
            other => {
                return Err(Error::ProblemFile(format!(
                    "unknown operator kind '{other}' (expected dense, diagonal or symmetric)"
                )))
            }
        };
        ForwardProblem::new(
            operator,
            self.exact_solution,
            self.exact_data,
            self.null_dim,
        )
    }
}
