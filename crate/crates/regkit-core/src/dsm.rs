//! Dynamical-flow solvers. Three flows are implemented, each driving a
//! trajectory from u(0) = 0 toward the minimal-norm solution:
//!
//! 1. `dsm1_*` — constant-parameter complex flow u̇ = i(B + ia)u − ig on a
//!    selfadjoint operator B, read off at a noise-dependent stopping time
//!    with a = δ^γ, t = δ^{−μ}.
//! 2. `dsm2_*` — the same flow with a decaying parameter schedule a(t);
//!    the state has a per-mode oscillatory integral representation that
//!    is evaluated by adaptive quadrature.
//! 3. `dsm3_*` — the real flow u̇ = −u + (T + a(t)I)⁻¹Aᵀf, whose
//!    right-hand side is a regularized solve.
//!
//! Every flow has a spectral closed form, which is the default backend;
//! the fixed-step integrators exist to validate the dynamical
//! formulation and to serve matrix-free use. A discrepancy stopping rule
//! maps the residual-matching parameter onto a stopping time through the
//! schedule inverse.
//!
//! Problems whose operator is already selfadjoint (diagonal or
//! symmetric positive semidefinite) are solved by flowing on the
//! operator itself with data f_δ; anything else is first reduced to the
//! normal equation T u = Aᵀf_δ, with the noise level rescaled by ‖A‖.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, integrate_adaptive};
use crate::operators::{ForwardProblem, LinearOperator, NoisyData, RegularizedSolver};
use crate::spectral::{ProblemModels, SpectralModel};
use crate::variational::{
    discrepancy_parameter, residual_norm_complex, residual_norm_real, DiscrepancyConfig, MethodTag,
    SolveReport,
};

/// Regularization floor substituted for δ^γ when a flow runs on exact
/// data, where the noise-based stopping rules degenerate.
pub const EXACT_DATA_A: f64 = 1e-6;

/// e-foldings of transient decay requested for exact-data horizons.
const EXACT_DATA_SPAN: f64 = 50.0;

/// Exponent beyond which e^{-x} factors are dropped from quadrature
/// windows (e^{-60} ≈ 9e-27).
const EXP_CUTOFF: f64 = 60.0;

/// Parameter schedules a(t) for the dynamical flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// a(t) = a.
    Constant { a: f64 },
    /// a(t) = c0 / (c1 + t)^b, c0, c1 > 0, 1/2 < b < 1.
    ///
    /// These parameter ranges already give every property the flows
    /// need, checked symbolically once and for all: a decays
    /// monotonically to zero, a' + a² is integrable while ∫a diverges,
    /// and a is twice continuously differentiable with ä > 0 and
    /// ȧ/a = −b/(c1+t) → 0.
    Power { c0: f64, c1: f64, b: f64 },
    /// a(τ) = τ^{−γ}, 0 < γ < 1: a horizon rule pairing the constant-a
    /// flow with its integration span τ.
    TauPower { gamma: f64 },
}

impl Schedule {
    pub fn constant(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::NonPositive {
                what: "constant schedule value",
                value: a,
            });
        }
        Ok(Self::Constant { a })
    }

    pub fn power(c0: f64, c1: f64, b: f64) -> Result<Self> {
        if !(c0 > 0.0 && c1 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "power schedule needs c0, c1 > 0, got c0={c0}, c1={c1}"
            )));
        }
        if !(b > 0.5 && b < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "power schedule exponent must lie in (1/2, 1), got {b}"
            )));
        }
        Ok(Self::Power { c0, c1, b })
    }

    pub fn tau_power(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon exponent gamma must lie in (0,1), got {gamma}"
            )));
        }
        Ok(Self::TauPower { gamma })
    }

    /// a(t). The horizon rule is only defined for t > 0.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant { a } => *a,
            Self::Power { c0, c1, b } => c0 / (c1 + t).powf(*b),
            Self::TauPower { gamma } => t.powf(-gamma),
        }
    }

    /// ∫₀ᵗ a(p) dp in closed form.
    pub fn integral(&self, t: f64) -> f64 {
        self.integral_between(0.0, t)
    }

    /// ∫ₛᵗ a(p) dp in closed form.
    pub fn integral_between(&self, s: f64, t: f64) -> f64 {
        match self {
            Self::Constant { a } => a * (t - s),
            Self::Power { c0, c1, b } => {
                let e = 1.0 - b;
                c0 * ((c1 + t).powf(e) - (c1 + s).powf(e)) / e
            }
            Self::TauPower { gamma } => {
                let e = 1.0 - gamma;
                (t.powf(e) - s.powf(e)) / e
            }
        }
    }

    /// The time at which the schedule reaches `target`, clamped at 0
    /// when the schedule starts below the target already.
    pub fn inverse(&self, target: f64) -> Result<f64> {
        if !(target > 0.0) || !target.is_finite() {
            return Err(Error::NonPositive {
                what: "schedule inversion target",
                value: target,
            });
        }
        match self {
            Self::Constant { .. } => Err(Error::InvalidConfig(
                "a constant schedule has no inverse; use a decaying schedule".into(),
            )),
            Self::Power { c0, c1, b } => Ok(((c0 / target).powf(1.0 / b) - c1).max(0.0)),
            Self::TauPower { gamma } => Ok(target.powf(-1.0 / gamma)),
        }
    }

    fn is_finite_on(&self, t0: f64) -> bool {
        self.value(t0).is_finite()
    }
}

/// Time grid and state sequence of one flow, with diagnostics.
#[derive(Debug, Clone)]
pub enum TrajectoryStates {
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<Complex64>>),
}

impl TrajectoryStates {
    pub fn len(&self) -> usize {
        match self {
            Self::Real(v) => v.len(),
            Self::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: TrajectoryStates,
    pub residuals: Vec<f64>,
    pub errors_vs_y: Option<Vec<f64>>,
    pub method: MethodTag,
    pub schedule: Schedule,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal_real(&self) -> Option<&[f64]> {
        match &self.states {
            TrajectoryStates::Real(v) => v.last().map(|s| s.as_slice()),
            _ => None,
        }
    }

    pub fn terminal_complex(&self) -> Option<&[Complex64]> {
        match &self.states {
            TrajectoryStates::Complex(v) => v.last().map(|s| s.as_slice()),
            _ => None,
        }
    }

    /// Records ‖u(t) − y‖ along the trajectory.
    pub fn compute_errors(&mut self, y: &[f64]) {
        let errs = match &self.states {
            TrajectoryStates::Real(states) => states
                .iter()
                .map(|u| linalg::norm(&linalg::sub(u, y)))
                .collect(),
            TrajectoryStates::Complex(states) => states
                .iter()
                .map(|u| {
                    u.iter()
                        .zip(y)
                        .map(|(z, &yk)| {
                            let dre = z.re - yk;
                            dre * dre + z.im * z.im
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .collect(),
        };
        self.errors_vs_y = Some(errs);
    }
}

fn synthesize_complex(model: &SpectralModel, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); model.dim()];
    for (k, &c) in coeffs.iter().enumerate() {
        if c.re != 0.0 || c.im != 0.0 {
            let col = model.basis_column(k);
            for (o, &b) in out.iter_mut().zip(col) {
                *o += c * b;
            }
        }
    }
    out
}

/// State of the constant-parameter flow at time t, assembled per
/// eigenmode of the selfadjoint flow operator B:
/// u_k(t) = (s_k + ia)⁻¹ (1 − e^{i(s_k + ia)t}) g_k.
/// As t → ∞ this converges to (B + ia)⁻¹ g.
pub fn dsm1_closed_form(
    model: &SpectralModel,
    g: &[f64],
    a: f64,
    t: f64,
) -> Result<Vec<Complex64>> {
    require_positive("regularization parameter a", a)?;
    require_nonnegative("time t", t)?;
    let coeffs = model.coefficients(g)?;
    let decay = (-a * t).exp();
    let mode_states: Vec<Complex64> = model
        .eigenvalues()
        .iter()
        .zip(&coeffs)
        .map(|(&s, &c)| {
            if c == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let phase = Complex64::new(0.0, s * t).exp();
            let filt = (Complex64::new(1.0, 0.0) - decay * phase) / Complex64::new(s, a);
            filt * c
        })
        .collect();
    Ok(synthesize_complex(model, &mode_states))
}

/// Classical fixed-step 4th-order integration of the complex linear
/// flow u̇ = i(B + ia)u − ig, u(0) = 0. The terminal state matches
/// `dsm1_closed_form` to O(step⁴).
pub fn dsm1_integrate(
    op_b: &LinearOperator,
    g: &[f64],
    a: f64,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    if !op_b.is_selfadjoint() {
        return Err(Error::Precondition(
            "flow operator must be selfadjoint; reduce the problem first".into(),
        ));
    }
    require_positive("regularization parameter a", a)?;
    require_positive("step", step)?;
    require_nonnegative("t_end", t_end)?;
    let n = op_b.cols();
    if g.len() != n {
        return Err(Error::DimensionMismatch {
            context: "dsm1_integrate data",
            expected: n,
            actual: g.len(),
        });
    }
    let g_norm = linalg::norm(g);
    let guard = 1e8 * g_norm / a;
    let gc: Vec<Complex64> = g.iter().map(|&x| Complex64::new(0.0, x)).collect(); // i·g

    let deriv = |u: &[Complex64]| -> Result<Vec<Complex64>> {
        let bu = op_b.apply_complex(u)?;
        Ok(bu
            .iter()
            .zip(u)
            .zip(&gc)
            .map(|((&b, &x), &ig)| Complex64::new(0.0, 1.0) * b - a * x - ig)
            .collect())
    };

    let mut u = vec![Complex64::new(0.0, 0.0); n];
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    let mut residuals = vec![residual_norm_complex(op_b, &u, g)?];
    while t < t_end {
        let h = step.min(t_end - t);
        let k1 = deriv(&u)?;
        let k2 = deriv(&rk_stage_c(&u, &k1, 0.5 * h))?;
        let k3 = deriv(&rk_stage_c(&u, &k2, 0.5 * h))?;
        let k4 = deriv(&rk_stage_c(&u, &k3, h))?;
        for i in 0..n {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        let state_norm = linalg::norm_complex(&u);
        if g_norm > 0.0 && state_norm > guard {
            return Err(Error::Instability {
                norm: state_norm,
                guard,
                t,
            });
        }
        times.push(t);
        residuals.push(residual_norm_complex(op_b, &u, g)?);
        states.push(u.clone());
    }
    Ok(Trajectory {
        times,
        states: TrajectoryStates::Complex(states),
        residuals,
        errors_vs_y: None,
        method: MethodTag::Dsm1,
        schedule: Schedule::Constant { a },
    })
}

fn rk_stage_c(u: &[Complex64], k: &[Complex64], h: f64) -> Vec<Complex64> {
    u.iter().zip(k).map(|(&x, &d)| x + h * d).collect()
}

fn rk_stage_r(u: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    u.iter().zip(k).map(|(&x, &d)| x + h * d).collect()
}

/// Stable step size for the explicit schemes: the eigenvalue magnitude
/// bounds the stiffness.
pub fn default_step(s_max: f64, a0: f64) -> f64 {
    (0.1f64).min(0.1 / (1.0 + s_max + a0))
}

/// Flow operator model, flow data and the effective noise level for a
/// problem: selfadjoint operators flow on themselves with data f_δ;
/// everything else flows on T = AᵀA with data Aᵀf_δ and noise ‖A‖·δ.
fn flow_setup<'m>(
    op: &LinearOperator,
    models: &'m ProblemModels,
    noisy: &NoisyData,
) -> Result<(&'m SpectralModel, Vec<f64>, f64)> {
    match models.flow() {
        Some(flow) => Ok((flow, noisy.data().to_vec(), noisy.delta())),
        None => Ok((
            models.gram(),
            op.apply_adjoint(noisy.data())?,
            noisy.delta() * models.operator_norm(),
        )),
    }
}

fn complex_report(
    problem: &ForwardProblem,
    noisy: &NoisyData,
    state: Vec<Complex64>,
    method: MethodTag,
    a: f64,
    t: f64,
) -> Result<SolveReport> {
    let residual = residual_norm_complex(problem.operator(), &state, noisy.data())?;
    let norm_sq: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    let report = SolveReport {
        method,
        solution: state.iter().map(|z| z.re).collect(),
        solution_imag: Some(state.iter().map(|z| z.im).collect()),
        a_chosen: a,
        t_chosen: Some(t),
        n_chosen: None,
        residual_norm: residual,
        error_norm: None,
        f_value: residual * residual + a * norm_sq,
        inner_iterations: 0,
    };
    Ok(report.with_error_vs(problem.exact_solution()))
}

fn real_report(
    problem: &ForwardProblem,
    noisy: &NoisyData,
    state: Vec<f64>,
    method: MethodTag,
    a: f64,
    t: f64,
) -> Result<SolveReport> {
    let residual = residual_norm_real(problem.operator(), &state, noisy.data())?;
    let norm = linalg::norm(&state);
    let report = SolveReport {
        method,
        solution: state,
        solution_imag: None,
        a_chosen: a,
        t_chosen: Some(t),
        n_chosen: None,
        residual_norm: residual,
        error_norm: None,
        f_value: residual * residual + a * norm * norm,
        inner_iterations: 0,
    };
    Ok(report.with_error_vs(problem.exact_solution()))
}

/// Constant-parameter flow with the power stopping rule a = δ^γ,
/// t = δ^{−μ}, μ > γ. Under the source condition y = Az with γ = 1/2 the
/// error is O(δ^{1/2}). Exact data runs with the documented floor
/// parameter and a horizon long enough to kill the transient.
pub fn dsm1_solve(
    problem: &ForwardProblem,
    models: &ProblemModels,
    noisy: &NoisyData,
    gamma: f64,
    mu: f64,
) -> Result<SolveReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "stopping exponent gamma must lie in (0,1), got {gamma}"
        )));
    }
    if !(mu > gamma) {
        return Err(Error::InvalidConfig(format!(
            "stopping exponents must satisfy mu > gamma, got gamma={gamma}, mu={mu}"
        )));
    }
    let (flow_model, g, delta_eff) = flow_setup(problem.operator(), models, noisy)?;
    let (a, t) = if delta_eff > 0.0 {
        (delta_eff.powf(gamma), delta_eff.powf(-mu))
    } else {
        (EXACT_DATA_A, EXACT_DATA_SPAN / EXACT_DATA_A)
    };
    let state = dsm1_closed_form(flow_model, &g, a, t)?;
    complex_report(problem, noisy, state, MethodTag::Dsm1, a, t)
}

/// State of the schedule-driven complex flow at time t, assembled per
/// eigenmode by adaptive quadrature of
/// u_k(t) = −i g_k ∫₀ᵗ e^{iλ_k(t−s)} e^{−∫ₛᵗ a(p)dp} ds.
/// The inner schedule integral is evaluated from its antiderivative,
/// never numerically.
pub fn dsm2_state(
    model: &SpectralModel,
    g: &[f64],
    sched: &Schedule,
    t: f64,
) -> Result<Vec<Complex64>> {
    require_nonnegative("time t", t)?;
    if matches!(sched, Schedule::TauPower { .. }) {
        return Err(Error::InvalidConfig(
            "horizon schedules do not drive time-dependent flows".into(),
        ));
    }
    let coeffs = model.coefficients(g)?;
    let tol = 1e-10 * linalg::norm(g).max(f64::MIN_POSITIVE);
    // restrict to the window where the damping factor is non-negligible
    let s_lo = damping_window_start(sched, t);
    let mut mode_states = vec![Complex64::new(0.0, 0.0); coeffs.len()];
    for (k, (&lam, &c)) in model.eigenvalues().iter().zip(&coeffs).enumerate() {
        if c == 0.0 {
            continue;
        }
        let integrand = |s: f64| -> Complex64 {
            let damp = (-sched.integral_between(s, t)).exp();
            Complex64::new(0.0, lam * (t - s)).exp() * damp
        };
        let integral = integrate_adaptive(&integrand, s_lo, t, tol)?;
        mode_states[k] = Complex64::new(0.0, -1.0) * c * integral;
    }
    Ok(synthesize_complex(model, &mode_states))
}

/// Largest s with ∫ₛᵗ a(p) dp = EXP_CUTOFF (0 when no such point).
fn damping_window_start(sched: &Schedule, t: f64) -> f64 {
    if sched.integral_between(0.0, t) <= EXP_CUTOFF {
        return 0.0;
    }
    match sched {
        Schedule::Constant { a } => (t - EXP_CUTOFF / a).max(0.0),
        Schedule::Power { c0, c1, b } => {
            let e = 1.0 - b;
            let target = (c1 + t).powf(e) - EXP_CUTOFF * e / c0;
            (target.powf(1.0 / e) - c1).max(0.0)
        }
        Schedule::TauPower { .. } => 0.0,
    }
}

/// Schedule-driven flow read off at the stopping time t_δ = a⁻¹(√δ), so
/// that δ/a(t_δ) = √δ vanishes with the noise.
pub fn dsm2_solve(
    problem: &ForwardProblem,
    models: &ProblemModels,
    noisy: &NoisyData,
    sched: &Schedule,
) -> Result<SolveReport> {
    require_power(sched)?;
    let (flow_model, g, delta_eff) = flow_setup(problem.operator(), models, noisy)?;
    let target = if delta_eff > 0.0 {
        delta_eff.sqrt()
    } else {
        EXACT_DATA_A
    };
    let t = sched.inverse(target)?;
    let state = dsm2_state(flow_model, &g, sched, t)?;
    complex_report(problem, noisy, state, MethodTag::Dsm2, sched.value(t), t)
}

/// State of the regularized-inverse flow at time t, assembled per
/// eigenmode of T as u_k(t) = g_k ∫₀ᵗ e^{−(t−σ)} / (s_k + a(σ)) dσ with
/// g = Aᵀf_δ.
pub fn dsm3_state(
    model_t: &SpectralModel,
    g: &[f64],
    sched: &Schedule,
    t: f64,
) -> Result<Vec<f64>> {
    require_nonnegative("time t", t)?;
    if matches!(sched, Schedule::TauPower { .. }) {
        return Err(Error::InvalidConfig(
            "horizon schedules do not drive time-dependent flows".into(),
        ));
    }
    let coeffs = model_t.coefficients(g)?;
    let lo = (t - EXP_CUTOFF).max(0.0);
    let mut mode_coeffs = vec![0.0; coeffs.len()];
    for (k, (&s, &c)) in model_t.eigenvalues().iter().zip(&coeffs).enumerate() {
        if c == 0.0 {
            continue;
        }
        let integrand = |sigma: f64| (-(t - sigma)).exp() / (s + sched.value(sigma));
        let scale = 1.0 + 1.0 / (s + sched.value(t));
        let integral = integrate_adaptive(&integrand, lo, t, 1e-11 * scale)?;
        mode_coeffs[k] = c * integral;
    }
    Ok(model_t.synthesize(&mode_coeffs))
}

/// Fixed-step 4th-order integration of u̇ = −u + (T + a(t)I)⁻¹Aᵀf_δ,
/// u(0) = 0. Each right-hand side evaluation performs a regularized
/// solve at the current schedule value.
pub fn dsm3_integrate(
    op: &LinearOperator,
    noisy: &NoisyData,
    sched: &Schedule,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    require_positive("step", step)?;
    require_nonnegative("t_end", t_end)?;
    if !sched.is_finite_on(0.0) {
        return Err(Error::InvalidConfig(
            "schedule must be finite at t = 0 for integration".into(),
        ));
    }
    let g = op.apply_adjoint(noisy.data())?;
    let g_norm = linalg::norm(&g);
    let a_floor = sched.value(t_end).min(sched.value(0.0));
    let guard = 1e8 * g_norm.max(1.0) / a_floor;
    let n = op.cols();

    let reg_solve = |time: f64| -> Result<Vec<f64>> {
        RegularizedSolver::new(op, sched.value(time))?.solve(&g)
    };

    let mut u = vec![0.0; n];
    let mut t = 0.0;
    let mut w_t = reg_solve(0.0)?;
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    let mut residuals = vec![residual_norm_real(op, &u, noisy.data())?];
    while t < t_end {
        let h = step.min(t_end - t);
        let w_half = reg_solve(t + 0.5 * h)?;
        let w_next = reg_solve(t + h)?;
        let k1: Vec<f64> = u.iter().zip(&w_t).map(|(&x, &w)| w - x).collect();
        let k2: Vec<f64> = rk_stage_r(&u, &k1, 0.5 * h)
            .iter()
            .zip(&w_half)
            .map(|(&x, &w)| w - x)
            .collect();
        let k3: Vec<f64> = rk_stage_r(&u, &k2, 0.5 * h)
            .iter()
            .zip(&w_half)
            .map(|(&x, &w)| w - x)
            .collect();
        let k4: Vec<f64> = rk_stage_r(&u, &k3, h)
            .iter()
            .zip(&w_next)
            .map(|(&x, &w)| w - x)
            .collect();
        for i in 0..n {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        w_t = w_next;
        let state_norm = linalg::norm(&u);
        if state_norm > guard {
            return Err(Error::Instability {
                norm: state_norm,
                guard,
                t,
            });
        }
        times.push(t);
        residuals.push(residual_norm_real(op, &u, noisy.data())?);
        states.push(u.clone());
    }
    Ok(Trajectory {
        times,
        states: TrajectoryStates::Real(states),
        residuals,
        errors_vs_y: None,
        method: MethodTag::Dsm3,
        schedule: *sched,
    })
}

/// Regularized-inverse flow with the stopping rule t_δ = a⁻¹(δ^{2/3}),
/// so that δ/√(a(t_δ)) = δ^{2/3} vanishes with the noise.
pub fn dsm3_solve(
    problem: &ForwardProblem,
    models: &ProblemModels,
    noisy: &NoisyData,
    sched: &Schedule,
) -> Result<SolveReport> {
    require_power(sched)?;
    let delta = noisy.delta();
    let target = if delta > 0.0 {
        delta.powf(2.0 / 3.0)
    } else {
        EXACT_DATA_A
    };
    let t = sched.inverse(target)?;
    let g = problem.operator().apply_adjoint(noisy.data())?;
    let state = dsm3_state(models.gram(), &g, sched, t)?;
    real_report(problem, noisy, state, MethodTag::Dsm3, sched.value(t), t)
}

/// Discrepancy stopping rule for the regularized-inverse flow: the
/// residual-matching parameter a_δ is computed first, then the stopping
/// time is its preimage t_δ = a⁻¹(a_δ) under the schedule, and the flow
/// state u_δ(t_δ) is returned. Exact data falls back to the
/// minimal-norm solve, where the residual equation is undefined.
pub fn dsm_discrepancy_stop(
    problem: &ForwardProblem,
    models: &ProblemModels,
    noisy: &NoisyData,
    sched: &Schedule,
    cfg: &DiscrepancyConfig,
) -> Result<SolveReport> {
    require_power(sched)?;
    if noisy.delta() == 0.0 {
        let u = crate::spectral::minimal_norm_solution(
            models.gram(),
            problem.operator(),
            noisy.data(),
        )?;
        let mut report = real_report(problem, noisy, u, MethodTag::MinimalNorm, 0.0, 0.0)?;
        report.t_chosen = None;
        return Ok(report);
    }
    let a_delta = discrepancy_parameter(models.data_gram(), noisy, cfg)?;
    let t = sched.inverse(a_delta)?;
    let g = problem.operator().apply_adjoint(noisy.data())?;
    let state = dsm3_state(models.gram(), &g, sched, t)?;
    real_report(problem, noisy, state, MethodTag::DsmDiscrepancy, a_delta, t)
}

fn require_power(sched: &Schedule) -> Result<()> {
    match sched {
        Schedule::Power { .. } => Ok(()),
        _ => Err(Error::InvalidConfig(
            "this solver requires a power schedule a(t) = c0/(c1+t)^b".into(),
        )),
    }
}

fn require_positive(what: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::NonPositive { what, value });
    }
    Ok(())
}

fn require_nonnegative(what: &'static str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::NonPositive { what, value });
    }
    Ok(())
}
