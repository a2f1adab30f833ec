//! Tikhonov regularization and parameter-choice rules: the a-priori
//! power schedule, the classical discrepancy principle (residual matched
//! to C·δ through the monotone spectral function h), and the relaxed
//! discrepancy principle for certified approximate minimizers.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{solve_regularized, LinearOperator, NoisyData, RegularizedSolver};
use crate::spectral::{
    discrepancy_function_from_coeffs, minimal_norm_solution, ProblemModels, SpectralModel,
};

/// Configuration of the discrepancy principle ‖A u − f_δ‖ = C δ.
///
/// `c` must lie strictly between 1 and 2. `b_slack` is the certification
/// slack for approximate minimizers: the inner solver must reach
/// F(u) ≤ min F + (C² − 1 − b_slack) δ², which requires C² > 1 + b_slack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscrepancyConfig {
    pub c: f64,
    pub b_slack: f64,
    /// Relative tolerance on the chosen parameter a.
    pub root_tol: f64,
    /// Optional bracket (a_min, a_max); derived from the spectrum when absent.
    pub bracket: Option<(f64, f64)>,
}

impl Default for DiscrepancyConfig {
    fn default() -> Self {
        Self {
            c: 1.5,
            b_slack: 0.5,
            root_tol: 1e-10,
            bracket: None,
        }
    }
}

impl DiscrepancyConfig {
    pub fn new(c: f64) -> Result<Self> {
        let cfg = Self {
            c,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0 && self.c < 2.0) {
            return Err(Error::InvalidConfig(format!(
                "discrepancy constant C must lie in (1,2), got {}",
                self.c
            )));
        }
        if !(self.b_slack > 0.0) || self.c * self.c <= 1.0 + self.b_slack {
            return Err(Error::InvalidConfig(format!(
                "need b_slack > 0 and C² > 1 + b_slack (C={}, b_slack={})",
                self.c, self.b_slack
            )));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::InvalidConfig("root_tol must be positive".into()));
        }
        if let Some((lo, hi)) = self.bracket {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "bracket must satisfy 0 < a_min < a_max, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Method identifiers, used in reports, CSV rows and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    TikhonovApriori,
    TikhonovDiscrepancy,
    TikhonovRelaxed,
    Dsm1,
    Dsm2,
    Dsm3,
    DsmDiscrepancy,
    IterateMin,
    IterateBalance,
    MinimalNorm,
}

impl MethodTag {
    pub const ALL: [MethodTag; 9] = [
        MethodTag::TikhonovApriori,
        MethodTag::TikhonovDiscrepancy,
        MethodTag::TikhonovRelaxed,
        MethodTag::Dsm1,
        MethodTag::Dsm2,
        MethodTag::Dsm3,
        MethodTag::DsmDiscrepancy,
        MethodTag::IterateMin,
        MethodTag::IterateBalance,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::TikhonovApriori => "tikhonov_apriori",
            MethodTag::TikhonovDiscrepancy => "tikhonov_discrepancy",
            MethodTag::TikhonovRelaxed => "tikhonov_relaxed",
            MethodTag::Dsm1 => "dsm1",
            MethodTag::Dsm2 => "dsm2",
            MethodTag::Dsm3 => "dsm3",
            MethodTag::DsmDiscrepancy => "dsm_discrepancy",
            MethodTag::IterateMin => "iterate_min",
            MethodTag::IterateBalance => "iterate_balance",
            MethodTag::MinimalNorm => "minimal_norm",
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodTag::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = MethodTag::ALL.iter().map(|m| m.as_str()).collect();
                Error::InvalidConfig(format!(
                    "unknown method '{s}'; valid methods: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Outcome of one solve: the estimate, the chosen parameter(s), residual
/// and error norms, and method metadata.
///
/// Methods with complex internal states store the real part in
/// `solution` and the imaginary part in `solution_imag`; norms are then
/// taken over the full complex state.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub method: MethodTag,
    pub solution: Vec<f64>,
    pub solution_imag: Option<Vec<f64>>,
    /// Regularization parameter in effect (0 for the minimal-norm fallback).
    pub a_chosen: f64,
    /// Stopping time, for the dynamical methods.
    pub t_chosen: Option<f64>,
    /// Stopping index, for the stationary iteration.
    pub n_chosen: Option<usize>,
    pub residual_norm: f64,
    pub error_norm: Option<f64>,
    /// F(u) = ‖Au − f_δ‖² + a‖u‖².
    pub f_value: f64,
    pub inner_iterations: usize,
}

impl SolveReport {
    pub fn imaginary_norm(&self) -> Option<f64> {
        self.solution_imag.as_ref().map(|im| linalg::norm(im))
    }

    /// The method's primary parameter for tabulation: stopping time,
    /// else stopping index, else the regularization parameter.
    pub fn primary_parameter(&self) -> f64 {
        if let Some(t) = self.t_chosen {
            t
        } else if let Some(n) = self.n_chosen {
            n as f64
        } else {
            self.a_chosen
        }
    }

    /// Recomputes ‖A u − f_δ‖ from the stored state; agrees with
    /// `residual_norm` to working precision by construction.
    pub fn recomputed_residual(&self, op: &LinearOperator, data: &[f64]) -> Result<f64> {
        match &self.solution_imag {
            None => residual_norm_real(op, &self.solution, data),
            Some(im) => {
                let state: Vec<Complex64> = self
                    .solution
                    .iter()
                    .zip(im)
                    .map(|(&re, &im)| Complex64::new(re, im))
                    .collect();
                residual_norm_complex(op, &state, data)
            }
        }
    }

    /// Returns the report with `error_norm` filled in against a known
    /// exact solution (full complex distance for complex-state methods).
    pub fn with_error_vs(mut self, exact: &[f64]) -> Self {
        self.error_norm = Some(match &self.solution_imag {
            None => linalg::norm(&linalg::sub(&self.solution, exact)),
            Some(im) => {
                let mut s = 0.0;
                for k in 0..exact.len() {
                    let dre = self.solution[k] - exact[k];
                    s += dre * dre + im[k] * im[k];
                }
                s.sqrt()
            }
        });
        self
    }
}

pub(crate) fn residual_norm_real(op: &LinearOperator, u: &[f64], data: &[f64]) -> Result<f64> {
    Ok(linalg::norm(&linalg::sub(&op.apply(u)?, data)))
}

pub(crate) fn residual_norm_complex(
    op: &LinearOperator,
    u: &[Complex64],
    data: &[f64],
) -> Result<f64> {
    let au = op.apply_complex(u)?;
    let mut s = 0.0;
    for (z, &f) in au.iter().zip(data) {
        let dre = z.re - f;
        s += dre * dre + z.im * z.im;
    }
    Ok(s.sqrt())
}

fn f_value(op: &LinearOperator, data: &[f64], a: f64, u: &[f64]) -> Result<f64> {
    let r = residual_norm_real(op, u, data)?;
    let un = linalg::norm(u);
    Ok(r * r + a * un * un)
}

/// Tikhonov regularization with a fixed parameter: solves
/// (AᵀA + aI) u = Aᵀ f_δ, the normal equation of
/// F(u) = ‖Au − f_δ‖² + a‖u‖².
pub fn tikhonov(op: &LinearOperator, noisy: &NoisyData, a: f64) -> Result<SolveReport> {
    let rhs = op.apply_adjoint(noisy.data())?;
    let u = solve_regularized(op, a, &rhs)?;
    let residual = residual_norm_real(op, &u, noisy.data())?;
    let un = linalg::norm(&u);
    Ok(SolveReport {
        method: MethodTag::TikhonovApriori,
        f_value: residual * residual + a * un * un,
        solution: u,
        solution_imag: None,
        a_chosen: a,
        t_chosen: None,
        n_chosen: None,
        residual_norm: residual,
        error_norm: None,
        inner_iterations: 0,
    })
}

/// A-priori parameter choice a(δ) = δ^γ with 0 < γ < 1. Satisfies both
/// vanishing conditions: a(δ) → 0 and δ/√a(δ) = δ^{1−γ/2} → 0.
pub fn apriori_parameter(delta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "a-priori exponent gamma must lie in (0,1), got {gamma}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::NonPositive {
            what: "noise level delta",
            value: delta,
        });
    }
    Ok(delta.powf(gamma))
}

/// Classical discrepancy principle: the unique a with
/// h(a, δ) = C²δ², located by bisection on log(a). Monotonicity of h
/// makes the bisection globally safe; the bracket is expanded
/// geometrically when the initial one does not straddle the target.
pub fn discrepancy_parameter(
    model_q: &SpectralModel,
    noisy: &NoisyData,
    cfg: &DiscrepancyConfig,
) -> Result<f64> {
    cfg.validate()?;
    let delta = noisy.delta();
    if !(delta > 0.0) {
        return Err(Error::Precondition(
            "discrepancy principle needs delta > 0; solve exact data by the minimal-norm route"
                .into(),
        ));
    }
    let c_delta = cfg.c * delta;
    let f_norm = linalg::norm(noisy.data());
    if f_norm <= c_delta {
        return Err(Error::Precondition(format!(
            "noisy data norm {f_norm:.6e} is at most C·δ = {c_delta:.6e}: \
             data indistinguishable from zero at this noise level"
        )));
    }
    let coeffs = model_q.coefficients(noisy.data())?;
    let null_mass: f64 = linalg::spectral_sum(
        model_q
            .eigenvalues()
            .iter()
            .zip(&coeffs)
            .filter(|(&q, _)| q == 0.0)
            .map(|(_, &c)| c * c)
            .collect(),
    );
    if null_mass.sqrt() >= c_delta {
        return Err(Error::Precondition(format!(
            "data component outside the operator range has norm {:.6e} ≥ C·δ = {:.6e}; \
             the residual cannot be brought down to C·δ",
            null_mass.sqrt(),
            c_delta
        )));
    }
    let target = c_delta * c_delta;
    let s_max = model_q.max_eigenvalue();
    let h = |a: f64| discrepancy_function_from_coeffs(model_q.eigenvalues(), &coeffs, a);
    let (mut lo, mut hi) = cfg.bracket.unwrap_or((1e-16 * s_max, 1e4 * s_max));

    let mut expansions = 0;
    while h(lo) >= target {
        lo /= 1e3;
        expansions += 1;
        if expansions > 60 || lo < f64::MIN_POSITIVE {
            return Err(Error::BracketFailure {
                lo,
                hi,
                context: "h(a) never falls below C²δ² at small a".into(),
            });
        }
    }
    expansions = 0;
    while h(hi) <= target {
        hi *= 1e3;
        expansions += 1;
        if expansions > 60 || !hi.is_finite() {
            return Err(Error::BracketFailure {
                lo,
                hi,
                context: "h(a) never exceeds C²δ² at large a".into(),
            });
        }
    }

    let mut log_lo = lo.ln();
    let mut log_hi = hi.ln();
    let width_tol = cfg.root_tol.min(1e-10);
    for _ in 0..256 {
        if log_hi - log_lo <= width_tol {
            break;
        }
        let mid = 0.5 * (log_lo + log_hi);
        if h(mid.exp()) < target {
            log_lo = mid;
        } else {
            log_hi = mid;
        }
    }
    Ok((0.5 * (log_lo + log_hi)).exp())
}

/// Full discrepancy-principle solve. Exact data (δ = 0) bypasses the
/// parameter choice and returns the minimal-norm solution, since the
/// residual equation is undefined there.
pub fn discrepancy_solve(
    op: &LinearOperator,
    models: &ProblemModels,
    noisy: &NoisyData,
    cfg: &DiscrepancyConfig,
) -> Result<SolveReport> {
    if noisy.delta() == 0.0 {
        let u = minimal_norm_solution(models.gram(), op, noisy.data())?;
        let residual = residual_norm_real(op, &u, noisy.data())?;
        return Ok(SolveReport {
            method: MethodTag::MinimalNorm,
            f_value: residual * residual,
            solution: u,
            solution_imag: None,
            a_chosen: 0.0,
            t_chosen: None,
            n_chosen: None,
            residual_norm: residual,
            error_norm: None,
            inner_iterations: 0,
        });
    }
    let a = discrepancy_parameter(models.data_gram(), noisy, cfg)?;
    let mut report = tikhonov(op, noisy, a)?;
    report.method = MethodTag::TikhonovDiscrepancy;
    Ok(report)
}

/// `discrepancy_solve` with the error against the problem's exact
/// solution filled in.
pub fn discrepancy_solve_problem(
    problem: &crate::operators::ForwardProblem,
    models: &ProblemModels,
    noisy: &NoisyData,
    cfg: &DiscrepancyConfig,
) -> Result<SolveReport> {
    let report = discrepancy_solve(problem.operator(), models, noisy, cfg)?;
    Ok(report.with_error_vs(problem.exact_solution()))
}

/// An approximate minimizer of F(u) = ‖Au − f_δ‖² + a‖u‖² that the
/// relaxed discrepancy principle can certify. `target_f` is the
/// certification level min F + (C² − 1 − b_slack)δ² the iterate must
/// reach; implementations return their candidate and an iteration count.
pub trait ApproximateMinimizer {
    fn minimize(
        &self,
        op: &LinearOperator,
        data: &[f64],
        a: f64,
        target_f: f64,
    ) -> Result<(Vec<f64>, usize)>;
}

/// The exact spectral minimizer: zero certification gap.
pub struct ExactMinimizer;

impl ApproximateMinimizer for ExactMinimizer {
    fn minimize(
        &self,
        op: &LinearOperator,
        data: &[f64],
        a: f64,
        _target_f: f64,
    ) -> Result<(Vec<f64>, usize)> {
        let rhs = op.apply_adjoint(data)?;
        Ok((solve_regularized(op, a, &rhs)?, 1))
    }
}

/// Conjugate-direction iteration on the normal equation, truncated at
/// the first iterate whose F-value reaches the certification target.
pub struct TruncatedCg {
    pub max_iter: usize,
}

impl Default for TruncatedCg {
    fn default() -> Self {
        Self { max_iter: 5000 }
    }
}

impl ApproximateMinimizer for TruncatedCg {
    fn minimize(
        &self,
        op: &LinearOperator,
        data: &[f64],
        a: f64,
        target_f: f64,
    ) -> Result<(Vec<f64>, usize)> {
        let n = op.cols();
        let rhs = op.apply_adjoint(data)?;
        let mut u = vec![0.0; n];
        if f_value(op, data, a, &u)? <= target_f {
            return Ok((u, 0));
        }
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rho = linalg::dot(&r, &r);
        for iter in 1..=self.max_iter {
            let mut ap = op.apply_adjoint(&op.apply(&p)?)?;
            linalg::axpy(&mut ap, a, &p);
            let alpha = rho / linalg::dot(&p, &ap);
            linalg::axpy(&mut u, alpha, &p);
            linalg::axpy(&mut r, -alpha, &ap);
            if f_value(op, data, a, &u)? <= target_f {
                return Ok((u, iter));
            }
            let rho_next = linalg::dot(&r, &r);
            let beta = rho_next / rho;
            rho = rho_next;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
        }
        // return the best iterate; certification in the caller reports the gap
        Ok((u, self.max_iter))
    }
}

/// Relaxed discrepancy principle: solves ‖A u_{a,δ} − f_δ‖ = C δ where
/// u_{a,δ} is produced by a certified approximate minimizer. For each
/// trial a, the exact minimum m of F is computed as the certificate and
/// the inner iterate must satisfy F(u) ≤ m + (C² − 1 − b_slack)δ².
pub fn relaxed_discrepancy(
    op: &LinearOperator,
    noisy: &NoisyData,
    cfg: &DiscrepancyConfig,
    inner: &dyn ApproximateMinimizer,
) -> Result<SolveReport> {
    cfg.validate()?;
    let delta = noisy.delta();
    if !(delta > 0.0) {
        return Err(Error::Precondition(
            "relaxed discrepancy principle needs delta > 0".into(),
        ));
    }
    let c_delta = cfg.c * delta;
    let f_norm = linalg::norm(noisy.data());
    if f_norm <= c_delta {
        return Err(Error::Precondition(format!(
            "noisy data norm {f_norm:.6e} is at most C·δ = {c_delta:.6e}: \
             data indistinguishable from zero at this noise level"
        )));
    }
    let allowance = (cfg.c * cfg.c - 1.0 - cfg.b_slack) * delta * delta;
    let data = noisy.data();
    let rhs = op.apply_adjoint(data)?;
    let mut total_inner = 0usize;

    // residual of the certified approximate minimizer at parameter a
    let mut evaluate = |a: f64| -> Result<(f64, Vec<f64>)> {
        let u_exact = RegularizedSolver::new(op, a)?.solve(&rhs)?;
        let m = f_value(op, data, a, &u_exact)?;
        let target = m + allowance;
        let (u, iters) = inner.minimize(op, data, a, target)?;
        total_inner += iters;
        let fu = f_value(op, data, a, &u)?;
        if fu > target + 1e-12 * target.abs() {
            return Err(Error::Certification {
                gap: fu - m,
                allowance,
            });
        }
        let res = residual_norm_real(op, &u, data)?;
        Ok((res, u))
    };

    // scan downward from the high end so the normal matrix is never
    // factored at parameters far below the eventual root
    let s_max_estimate = gram_norm_estimate(op)?;
    let (bracket_floor, mut hi) = cfg
        .bracket
        .unwrap_or((1e-16 * s_max_estimate, 1e4 * s_max_estimate));
    let (mut res_hi, _) = evaluate(hi)?;
    while res_hi <= c_delta {
        hi *= 1e2;
        if !hi.is_finite() {
            return Err(Error::BracketFailure {
                lo: bracket_floor,
                hi,
                context: "residual never exceeds C·δ at large a".into(),
            });
        }
        res_hi = evaluate(hi)?.0;
    }
    let mut lo = hi;
    loop {
        lo /= 10.0;
        if lo < bracket_floor {
            return Err(Error::BracketFailure {
                lo,
                hi,
                context: "residual never falls below C·δ within the bracket".into(),
            });
        }
        let (res_lo, _) = evaluate(lo)?;
        if res_lo < c_delta {
            break;
        }
        hi = lo;
    }

    let mut log_lo = lo.ln();
    let mut log_hi = hi.ln();
    let width_tol = cfg.root_tol.min(1e-10);
    for _ in 0..256 {
        if log_hi - log_lo <= width_tol {
            break;
        }
        let mid = 0.5 * (log_lo + log_hi);
        if evaluate(mid.exp())?.0 < c_delta {
            log_lo = mid;
        } else {
            log_hi = mid;
        }
    }
    let a = (0.5 * (log_lo + log_hi)).exp();
    let (residual, u) = evaluate(a)?;
    let un = linalg::norm(&u);
    Ok(SolveReport {
        method: MethodTag::TikhonovRelaxed,
        f_value: residual * residual + a * un * un,
        solution: u,
        solution_imag: None,
        a_chosen: a,
        t_chosen: None,
        n_chosen: None,
        residual_norm: residual,
        error_norm: None,
        inner_iterations: total_inner,
    })
}

/// Power-iteration estimate of ‖AᵀA‖, used only for default brackets.
fn gram_norm_estimate(op: &LinearOperator) -> Result<f64> {
    let n = op.cols();
    let mut v: Vec<f64> = (0..n).map(|k| 1.0 + (k as f64 * 0.7).sin()).collect();
    let mut norm_v = linalg::norm(&v);
    if norm_v == 0.0 {
        v[0] = 1.0;
        norm_v = 1.0;
    }
    let mut lambda: f64 = 0.0;
    for _ in 0..40 {
        for x in v.iter_mut() {
            *x /= norm_v;
        }
        let w = op.apply_adjoint(&op.apply(&v)?)?;
        lambda = linalg::dot(&v, &w);
        v = w;
        norm_v = linalg::norm(&v);
        if norm_v == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(lambda.abs().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{decompose_data_gram, regularization_bias, solution_operator_norm};

    fn hilbert(n: usize) -> LinearOperator {
        let entries: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).map(move |j| 1.0 / ((i + j + 1) as f64)))
            .collect();
        LinearOperator::symmetric(n, entries).unwrap()
    }

    #[test]
    fn tikhonov_identity_scalar_filter() {
        let id = LinearOperator::identity(2);
        let noisy = NoisyData::new(vec![2.0, 0.0], 0.1, 0).unwrap();
        let rep = tikhonov(&id, &noisy, 1.0).unwrap();
        assert_eq!(rep.solution, vec![1.0, 0.0]);
        assert!((rep.residual_norm - 1.0).abs() < 1e-14);
        assert!((rep.f_value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tikhonov_over_regularization_limit() {
        let id = LinearOperator::identity(2);
        let noisy = NoisyData::new(vec![1.0, -1.0], 0.0, 0).unwrap();
        let rep = tikhonov(&id, &noisy, 1e12).unwrap();
        assert!(linalg::norm(&rep.solution) <= 2f64.sqrt() / 1e12 * (1.0 + 1e-12));
    }

    #[test]
    fn tikhonov_diagonal_per_mode_closed_form() {
        let d = LinearOperator::diagonal(vec![1.0, 0.5]).unwrap();
        let noisy = NoisyData::new(vec![1.0, 1.0], 0.05, 0).unwrap();
        let rep = tikhonov(&d, &noisy, 0.1).unwrap();
        assert!((rep.solution[0] - 1.0 / 1.1).abs() < 1e-15);
        assert!((rep.solution[1] - 0.5 / 0.35).abs() < 1e-15);
    }

    #[test]
    fn tikhonov_minimizer_optimality_against_perturbations() {
        let op = hilbert(6);
        let noisy = NoisyData::new(vec![0.9, 0.1, -0.2, 0.4, 0.05, -0.3], 0.01, 0).unwrap();
        let a = 0.02;
        let rep = tikhonov(&op, &noisy, a).unwrap();
        let f_star = f_value(&op, noisy.data(), a, &rep.solution).unwrap();
        let mut state = 9119u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) - 0.5
        };
        for _ in 0..100 {
            let eps = 10f64.powf(-3.0 * next().abs() - 1.0);
            let mut v = rep.solution.clone();
            for x in v.iter_mut() {
                *x += eps * next();
            }
            let f_v = f_value(&op, noisy.data(), a, &v).unwrap();
            assert!(f_star <= f_v + 1e-10);
        }
    }

    #[test]
    fn apriori_examples() {
        assert!((apriori_parameter(1e-4, 0.5).unwrap() - 1e-2).abs() < 1e-17);
        assert_eq!(apriori_parameter(1.0, 0.3).unwrap(), 1.0);
        assert!((apriori_parameter(1e-6, 2.0 / 3.0).unwrap() - 1e-4).abs() < 1e-15);
        assert!(apriori_parameter(1e-3, 0.0).is_err());
        assert!(apriori_parameter(1e-3, 1.0).is_err());
        assert!(apriori_parameter(0.0, 0.5).is_err());
    }

    #[test]
    fn discrepancy_identity_closed_form() {
        // a/(1+a) = Cδ/‖f_δ‖ = 0.15 -> a = 0.15/0.85
        let id = LinearOperator::identity(2);
        let model = decompose_data_gram(&id).unwrap();
        // rotate f so ‖f_δ‖ = 1 and ‖f_δ − f‖ = 0.1 both hold exactly
        let theta = 2.0 * (0.05f64).asin();
        let noisy = NoisyData::new(vec![theta.cos(), theta.sin()], 0.1, 0).unwrap();
        let cfg = DiscrepancyConfig::new(1.5).unwrap();
        let a = discrepancy_parameter(&model, &noisy, &cfg).unwrap();
        let expected = 0.15 / 0.85;
        assert!(
            (a - expected).abs() <= 1e-8 * expected,
            "a = {a}, expected {expected}"
        );
        // residual at the root equals Cδ to the root tolerance
        let rep = tikhonov(&id, &noisy, a).unwrap();
        assert!((rep.residual_norm - 0.15).abs() <= 1e-8 * 0.15);
    }

    #[test]
    fn discrepancy_two_mode_dense_grid_oracle() {
        // root of the two-term h matches a brute-force scan over a dense
        // log grid of one million parameter values
        let op = LinearOperator::diagonal(vec![1.0, 2f64.sqrt().recip()]).unwrap();
        let model = decompose_data_gram(&op).unwrap();
        let q_entries = [model.eigenvalues()[0], model.eigenvalues()[1]];
        assert!((q_entries[1] - 0.5).abs() < 1e-15);
        let noisy = NoisyData::new(vec![1.0, 1.0], 0.05, 0).unwrap();
        let cfg = DiscrepancyConfig {
            c: 1.1,
            b_slack: 0.1,
            ..DiscrepancyConfig::default()
        };
        let a = discrepancy_parameter(&model, &noisy, &cfg).unwrap();

        let target = (1.1f64 * 0.05).powi(2);
        let h = |a: f64| -> f64 {
            q_entries
                .iter()
                .map(|&q| (a / (q + a)).powi(2))
                .sum::<f64>()
        };
        let (mut best, mut best_gap) = (0.0, f64::INFINITY);
        for k in 0..1_000_000 {
            let cand = 10f64.powf(-8.0 + 10.0 * k as f64 / 999_999.0);
            let gap = (h(cand) - target).abs();
            if gap < best_gap {
                best_gap = gap;
                best = cand;
            }
        }
        assert!(
            (a - best).abs() <= 2e-5 * best,
            "bisection {a} vs grid {best}"
        );
        // tight residual verification through the actual solve
        let rep = tikhonov(&op, &noisy, a).unwrap();
        assert!((rep.residual_norm - 1.1 * 0.05).abs() <= 1e-9);
    }

    #[test]
    fn discrepancy_rejects_small_data() {
        let id = LinearOperator::identity(2);
        let model = decompose_data_gram(&id).unwrap();
        let noisy = NoisyData::new(vec![0.05, 0.0], 0.1, 0).unwrap();
        let cfg = DiscrepancyConfig::default();
        assert!(matches!(
            discrepancy_parameter(&model, &noisy, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn discrepancy_solution_norm_bounded_by_exact_norm() {
        // consequence of F(u_δ) ≤ F(y) when the residual is pinned at Cδ > δ
        let op = hilbert(6);
        let y: Vec<f64> = (0..6).map(|k| ((k + 1) as f64 * 0.37).sin()).collect();
        let f = op.apply(&y).unwrap();
        let mut fd = f.clone();
        // one fixed noise direction scaled to δ exactly
        let mut e: Vec<f64> = (0..6).map(|k| ((k * k + 1) as f64).cos()).collect();
        let en = linalg::norm(&e);
        for x in e.iter_mut() {
            *x /= en;
        }
        for delta in [1e-1, 1e-2, 1e-3] {
            for (k, x) in fd.iter_mut().enumerate() {
                *x = f[k] + delta * e[k];
            }
            let noisy = NoisyData::new(fd.clone(), delta, 0).unwrap();
            let model = decompose_data_gram(&op).unwrap();
            let cfg = DiscrepancyConfig::default();
            let a = discrepancy_parameter(&model, &noisy, &cfg).unwrap();
            let rep = tikhonov(&op, &noisy, a).unwrap();
            let y_norm = linalg::norm(&y);
            assert!(linalg::norm(&rep.solution) <= y_norm * (1.0 + 1e-10));
        }
    }

    #[test]
    fn error_bound_delta_over_sqrt_a_plus_bias() {
        // measured ‖u_{a,δ} − y‖ never exceeds δ‖T_a⁻¹Aᵀ‖ + η(a)
        let op = hilbert(5);
        let models = ProblemModels::build(&op).unwrap();
        let y: Vec<f64> = (0..5).map(|k| ((k + 2) as f64).ln()).collect();
        let f = op.apply(&y).unwrap();
        let mut e: Vec<f64> = (0..5).map(|k| ((2 * k + 1) as f64).sin()).collect();
        let en = linalg::norm(&e);
        for x in e.iter_mut() {
            *x /= en;
        }
        for delta in [1e-2, 1e-4] {
            let fd: Vec<f64> = f.iter().zip(&e).map(|(&fk, &ek)| fk + delta * ek).collect();
            let noisy = NoisyData::new(fd, delta, 0).unwrap();
            for a in [1e-1, 1e-3, 1e-5] {
                let rep = tikhonov(&op, &noisy, a).unwrap();
                let err = linalg::norm(&linalg::sub(&rep.solution, &y));
                let eta = regularization_bias(models.gram(), &y, a).unwrap();
                let gain = solution_operator_norm(models.gram(), a).unwrap();
                assert!(
                    err <= delta * gain.min(0.5 / a.sqrt()) + eta + 1e-9,
                    "a={a}, delta={delta}: {err} vs {}",
                    delta * gain + eta
                );
            }
        }
    }

    #[test]
    fn relaxed_with_exact_inner_matches_classical_root() {
        let op = hilbert(6);
        let y: Vec<f64> = (0..6).map(|k| (k as f64 + 0.5).cos()).collect();
        let f = op.apply(&y).unwrap();
        let mut e: Vec<f64> = (0..6).map(|k| ((k + 3) as f64).sin()).collect();
        let en = linalg::norm(&e);
        for x in e.iter_mut() {
            *x /= en;
        }
        let delta = 1e-2;
        let fd: Vec<f64> = f.iter().zip(&e).map(|(&fk, &ek)| fk + delta * ek).collect();
        let noisy = NoisyData::new(fd, delta, 0).unwrap();
        let cfg = DiscrepancyConfig::default();
        let model = decompose_data_gram(&op).unwrap();

        let a_classical = discrepancy_parameter(&model, &noisy, &cfg).unwrap();
        let rep = relaxed_discrepancy(&op, &noisy, &cfg, &ExactMinimizer).unwrap();
        assert!(
            (rep.a_chosen - a_classical).abs() <= 1e-8 * a_classical,
            "relaxed {} vs classical {}",
            rep.a_chosen,
            a_classical
        );
    }

    #[test]
    fn relaxed_truncated_cg_error_decreases_with_delta() {
        let op = hilbert(8);
        let y: Vec<f64> = (0..8).map(|k| ((k + 1) as f64 * 0.83).sin()).collect();
        let f = op.apply(&y).unwrap();
        let mut e: Vec<f64> = (0..8).map(|k| ((k + 7) as f64 * 1.7).cos()).collect();
        let en = linalg::norm(&e);
        for x in e.iter_mut() {
            *x /= en;
        }
        let cfg = DiscrepancyConfig::default(); // C = 1.5, b_slack = 0.5
        let inner = TruncatedCg::default();
        let mut errors = Vec::new();
        for delta in [1e-1, 1e-2, 1e-3, 1e-4] {
            let fd: Vec<f64> = f.iter().zip(&e).map(|(&fk, &ek)| fk + delta * ek).collect();
            let noisy = NoisyData::new(fd, delta, 0).unwrap();
            let rep = relaxed_discrepancy(&op, &noisy, &cfg, &inner).unwrap();
            errors.push(linalg::norm(&linalg::sub(&rep.solution, &y)));
        }
        assert!(
            errors.last().unwrap() < errors.first().unwrap(),
            "errors {errors:?}"
        );
    }

    #[test]
    fn relaxed_rejects_infeasible_inner_solver() {
        struct ZeroGuess;
        impl ApproximateMinimizer for ZeroGuess {
            fn minimize(
                &self,
                op: &LinearOperator,
                _data: &[f64],
                _a: f64,
                _target_f: f64,
            ) -> Result<(Vec<f64>, usize)> {
                Ok((vec![0.0; op.cols()], 0))
            }
        }
        let op = hilbert(4);
        let y = vec![1.0, 0.5, -0.25, 0.75];
        let f = op.apply(&y).unwrap();
        let delta = 1e-3;
        let mut fd = f.clone();
        fd[0] += delta;
        let noisy = NoisyData::new(fd, delta, 0).unwrap();
        let cfg = DiscrepancyConfig::default();
        assert!(matches!(
            relaxed_discrepancy(&op, &noisy, &cfg, &ZeroGuess),
            Err(Error::Certification { .. })
        ));
    }

    #[test]
    fn relaxed_inner_iterate_is_continuous_on_parameter_grid() {
        // empirical continuity of a ↦ u_{a,δ} for the deterministic
        // truncated-CG inner solver
        let op = hilbert(5);
        let y = vec![0.4, -0.1, 0.9, 0.2, -0.5];
        let f = op.apply(&y).unwrap();
        let delta = 1e-2;
        let mut fd = f.clone();
        fd[1] += delta;
        let noisy = NoisyData::new(fd, delta, 0).unwrap();
        let cfg = DiscrepancyConfig::default();
        let inner = TruncatedCg::default();
        let a0 = {
            let model = decompose_data_gram(&op).unwrap();
            discrepancy_parameter(&model, &noisy, &cfg).unwrap()
        };
        let allowance = (cfg.c * cfg.c - 1.0 - cfg.b_slack) * delta * delta;
        let rhs = op.apply_adjoint(noisy.data()).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for k in 0..21 {
            let a = a0 * 2f64.powf(-1.0 + 0.1 * k as f64);
            let u_exact = RegularizedSolver::new(&op, a).unwrap().solve(&rhs).unwrap();
            let m = f_value(&op, noisy.data(), a, &u_exact).unwrap();
            let (u, _) = inner.minimize(&op, noisy.data(), a, m + allowance).unwrap();
            if let Some(p) = prev {
                let jump = linalg::norm(&linalg::sub(&u, &p));
                assert!(jump <= 0.25 * linalg::norm(&u).max(1e-12), "jump {jump}");
            }
            prev = Some(u);
        }
    }

    #[test]
    fn report_residual_recomputes_from_stored_state() {
        let op = hilbert(5);
        let noisy = NoisyData::new(vec![0.4, 0.1, -0.2, 0.3, 0.0], 0.01, 0).unwrap();
        let rep = tikhonov(&op, &noisy, 0.05).unwrap();
        let recomputed = rep.recomputed_residual(&op, noisy.data()).unwrap();
        assert!((recomputed - rep.residual_norm).abs() <= 1e-12 * rep.residual_norm);
    }

    #[test]
    fn method_tags_round_trip() {
        for tag in MethodTag::ALL {
            assert_eq!(tag.as_str().parse::<MethodTag>().unwrap(), tag);
        }
        assert!("no_such_method".parse::<MethodTag>().is_err());
    }
}
