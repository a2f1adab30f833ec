//! Benchmark problem generators, calibrated noise injection, and the
//! counterexample showing the discrepancy principle does not converge
//! uniformly over the data.
//!
//! Generators are seeded and deterministic: the same spec always
//! produces bitwise-identical problems.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, kahan_sum};
use crate::operators::{ForwardProblem, LinearOperator, NoisyData};
use crate::spectral::decompose_selfadjoint;

/// Benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// A = diag(k^{−p}), k = 1..n.
    DiagonalPower,
    /// A_{ij} = 1/(i+j−1), the classical ill-conditioned symmetric matrix.
    Hilbert,
    /// Galerkin discretization of the Gaussian convolution kernel
    /// exp(−(x−t)²/(2σ²)) on a uniform grid over [0, 1].
    FredholmGauss,
    /// A = diag(k^{−1/2}), so the normal operator has eigenvalues 1/k:
    /// the spectrum of the non-uniformity counterexample.
    Counterexample,
}

impl Family {
    pub const NAMES: [&'static str; 4] = [
        "diagonal_power",
        "hilbert",
        "fredholm_gauss",
        "counterexample",
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "diagonal_power" => Ok(Self::DiagonalPower),
            "hilbert" => Ok(Self::Hilbert),
            "fredholm_gauss" => Ok(Self::FredholmGauss),
            "counterexample" => Ok(Self::Counterexample),
            other => Err(Error::InvalidConfig(format!(
                "unknown problem family '{other}'; valid families: {}",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DiagonalPower => "diagonal_power",
            Self::Hilbert => "hilbert",
            Self::FredholmGauss => "fredholm_gauss",
            Self::Counterexample => "counterexample",
        }
    }
}

/// Specification of one generated benchmark problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: Family,
    pub size: usize,
    /// Decay exponent of the diagonal family (d_k = k^{−p}).
    #[serde(default = "default_power")]
    pub power_p: f64,
    /// When set, the exact solution is generated as y = A^γ z with a
    /// random unit z, planting the smoothness the rate estimates need.
    #[serde(default)]
    pub source_condition: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Kernel width σ of the Gaussian convolution family.
    #[serde(default = "default_sigma")]
    pub kernel_width: f64,
}

fn default_power() -> f64 {
    1.0
}

fn default_sigma() -> f64 {
    0.1
}

impl ProblemSpec {
    pub fn new(family: Family, size: usize) -> Self {
        Self {
            family,
            size,
            power_p: default_power(),
            source_condition: None,
            seed: 0,
            kernel_width: default_sigma(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidConfig(
                "problem size must be at least 1".into(),
            ));
        }
        if self.family == Family::DiagonalPower && !(self.power_p > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "diagonal family needs power_p > 0, got {}",
                self.power_p
            )));
        }
        if self.family == Family::FredholmGauss && !(self.kernel_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kernel width must be positive, got {}",
                self.kernel_width
            )));
        }
        if let Some(gamma) = self.source_condition {
            if !(gamma > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "source-condition exponent must be positive, got {gamma}"
                )));
            }
        }
        Ok(())
    }
}

fn unit_gaussian(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = linalg::norm(&v);
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Builds the operator of a family.
fn build_operator(spec: &ProblemSpec) -> Result<LinearOperator> {
    let n = spec.size;
    match spec.family {
        Family::DiagonalPower => {
            let diag: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-spec.power_p)).collect();
            LinearOperator::diagonal(diag)
        }
        Family::Counterexample => {
            let diag: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-0.5)).collect();
            LinearOperator::diagonal(diag)
        }
        Family::Hilbert => {
            let entries: Vec<f64> = (0..n)
                .flat_map(|i| (0..n).map(move |j| 1.0 / ((i + j + 1) as f64)))
                .collect();
            LinearOperator::symmetric(n, entries)
        }
        Family::FredholmGauss => {
            let h = 1.0 / n as f64;
            let sigma = spec.kernel_width;
            let node = |i: usize| (i as f64 + 0.5) * h;
            let mut entries = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let d = node(i) - node(j);
                    let v = h * (-d * d / (2.0 * sigma * sigma)).exp();
                    entries[i * n + j] = v;
                    entries[j * n + i] = v;
                }
            }
            LinearOperator::symmetric(n, entries)
        }
    }
}

/// Generates a benchmark problem: the family operator, an exact
/// solution (random unit vector, or A^γ z under a source condition) and
/// the consistent data f = A y.
pub fn generate(spec: &ProblemSpec) -> Result<ForwardProblem> {
    spec.validate()?;
    let op = build_operator(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let y = match spec.source_condition {
        None => unit_gaussian(spec.size, &mut rng),
        Some(gamma) => {
            let z = unit_gaussian(spec.size, &mut rng);
            operator_power_apply(&op, gamma, &z)?
        }
    };
    let f = op.apply(&y)?;
    ForwardProblem::new(op, y, f, 0)
}

/// A^γ z for a positive semidefinite selfadjoint operator, evaluated
/// spectrally. Diagonal operators use the entrywise power directly.
fn operator_power_apply(op: &LinearOperator, gamma: f64, z: &[f64]) -> Result<Vec<f64>> {
    match op {
        LinearOperator::Diagonal { diag } => Ok(diag
            .iter()
            .zip(z)
            .map(|(&d, &zk)| if d == 0.0 { 0.0 } else { d.powf(gamma) * zk })
            .collect()),
        _ => {
            let model = decompose_selfadjoint(op)?;
            let coeffs = model.coefficients(z)?;
            let powered: Vec<f64> = model
                .eigenvalues()
                .iter()
                .zip(&coeffs)
                .map(|(&s, &c)| if s == 0.0 { 0.0 } else { s.powf(gamma) * c })
                .collect();
            Ok(model.synthesize(&powered))
        }
    }
}

/// Adds noise of level `delta` in a seeded standard-normal direction:
/// f_δ = f + δ e/‖e‖. Adding a small perturbation to f rounds at the
/// representation level of f, so the perturbation actually stored is
/// rescaled once against that rounding and the *measured* level is
/// certified in the returned value; it agrees with the request to a few
/// ulps of ‖f‖ and satisfies ‖f_δ − f‖ = δ sharply.
pub fn add_noise(problem: &ForwardProblem, delta: f64, seed: u64) -> Result<NoisyData> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidConfig(format!("noise level {delta} invalid")));
    }
    if delta == 0.0 {
        return Ok(NoisyData::exact(problem.exact_data()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = problem.exact_data();
    let e = unit_gaussian(f.len(), &mut rng);
    let mut data: Vec<f64> = f.iter().zip(&e).map(|(&fk, &ek)| fk + delta * ek).collect();
    // rescale the representable perturbation to the requested length
    let stored = linalg::sub(&data, f);
    let stored_norm = linalg::norm(&stored);
    if stored_norm > 0.0 {
        let scale = delta / stored_norm;
        data = f
            .iter()
            .zip(&stored)
            .map(|(&fk, &rk)| fk + scale * rk)
            .collect();
    }
    let certified = linalg::norm(&linalg::sub(&data, f));
    NoisyData::new(data, certified, seed)
}

/// Parameter equation of the non-uniformity counterexample: with
/// normal-operator eigenvalues 1/j and squared data coefficients 1/j²,
/// the residual-matching condition reads
/// C²δ²/a² = Σ_{j≥1} 1/(1 + aj)².
///
/// The sum is evaluated with `j_terms` explicit terms (compensated, in
/// descending magnitude) plus the exact integral tail
/// ∫_J^∞ dj/(1+aj)² = 1/(a(1+aJ)). Returns the root a(δ) and the ratio
/// δ/√a, which stays bounded away from zero — the uniform-convergence
/// obstruction — and tends to 1/C as δ → 0.
pub fn counterexample_root(j_terms: usize, c: f64, delta: f64) -> Result<(f64, f64)> {
    counterexample_root_inner(j_terms, c, delta, true)
}

fn counterexample_root_inner(
    j_terms: usize,
    c: f64,
    delta: f64,
    tail_corrected: bool,
) -> Result<(f64, f64)> {
    if !(c > 1.0 && c < 2.0) {
        return Err(Error::InvalidConfig(format!(
            "counterexample constant C must lie in (1,2), got {c}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::NonPositive {
            what: "noise level delta",
            value: delta,
        });
    }
    if j_terms == 0 {
        return Err(Error::InvalidConfig("need at least one series term".into()));
    }
    let target = c * c * delta * delta;
    // g(a) = a² Σ_{j≤J} 1/(1+aj)² + a/(1+aJ) − C²δ², increasing in a
    let g = |a: f64| -> f64 {
        let sum = kahan_sum((1..=j_terms).map(|j| {
            let d = 1.0 + a * j as f64;
            1.0 / (d * d)
        }));
        let mut value = a * a * sum;
        if tail_corrected {
            value += a / (1.0 + a * j_terms as f64);
        }
        value - target
    };
    let mut lo = 1e-30f64;
    let mut hi = 1e3f64;
    let mut expansions = 0;
    while g(lo) >= 0.0 {
        lo /= 1e3;
        expansions += 1;
        if expansions > 60 || lo < f64::MIN_POSITIVE {
            return Err(Error::BracketFailure {
                lo,
                hi,
                context: "counterexample equation has no sign change at small a".into(),
            });
        }
    }
    expansions = 0;
    while g(hi) <= 0.0 {
        hi *= 1e3;
        expansions += 1;
        if expansions > 60 || !hi.is_finite() {
            return Err(Error::BracketFailure {
                lo,
                hi,
                context: "counterexample equation has no sign change at large a \
                          (is C·δ too large for the series mass?)"
                    .into(),
            });
        }
    }
    let mut log_lo = lo.ln();
    let mut log_hi = hi.ln();
    for _ in 0..256 {
        if log_hi - log_lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (log_lo + log_hi);
        if g(mid.exp()) < 0.0 {
            log_lo = mid;
        } else {
            log_hi = mid;
        }
    }
    let a = (0.5 * (log_lo + log_hi)).exp();
    Ok((a, delta / a.sqrt()))
}
