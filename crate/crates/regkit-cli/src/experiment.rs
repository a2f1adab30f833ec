//! Experiment configuration, method dispatch, sweep execution and rate
//! fitting.
//!
//! A sweep runs every configured method over every noise level and
//! repetition, on noisy data shared across methods (the seed depends
//! only on the noise cell, not the method). Cells execute on a worker
//! pool; rows are emitted in configuration order.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use regkit_core::dsm::{dsm1_solve, dsm2_solve, dsm3_solve, dsm_discrepancy_stop, Schedule};
use regkit_core::iterative::{iterate_solve, StoppingRule};
use regkit_core::operators::{ForwardProblem, NoisyData};
use regkit_core::problems::{add_noise, generate, ProblemSpec};
use regkit_core::spectral::ProblemModels;
use regkit_core::variational::{
    apriori_parameter, discrepancy_solve_problem, relaxed_discrepancy, tikhonov, DiscrepancyConfig,
    MethodTag, SolveReport, TruncatedCg,
};

use crate::pool;

fn default_gamma() -> f64 {
    0.5
}
fn default_mu() -> f64 {
    0.75
}
fn default_c() -> f64 {
    1.5
}
fn default_schedule() -> Schedule {
    Schedule::power(1.0, 1.0, 0.75).expect("default schedule is valid")
}
fn default_n_max() -> usize {
    10_000
}
fn default_repetitions() -> usize {
    1
}

/// Discrepancy configuration from a constant, with a certification
/// slack that is always compatible (b = min(1/2, (C²−1)/2)).
pub fn discrepancy_config(c: f64) -> DiscrepancyConfig {
    let b_slack = (0.5f64).min(0.5 * (c * c - 1.0));
    DiscrepancyConfig {
        c,
        b_slack,
        ..DiscrepancyConfig::default()
    }
}

/// One method with its parameters, as written in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    TikhonovApriori {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    TikhonovDiscrepancy {
        #[serde(default = "default_c")]
        c: f64,
    },
    TikhonovRelaxed {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        b_slack: Option<f64>,
    },
    Dsm1 {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_mu")]
        mu: f64,
    },
    Dsm2 {
        #[serde(default = "default_schedule")]
        schedule: Schedule,
    },
    Dsm3 {
        #[serde(default = "default_schedule")]
        schedule: Schedule,
    },
    DsmDiscrepancy {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_schedule")]
        schedule: Schedule,
    },
    IterateMin {
        #[serde(default)]
        a: Option<f64>,
        #[serde(default = "default_n_max")]
        n_max: usize,
    },
    IterateBalance {
        #[serde(default)]
        a: Option<f64>,
        #[serde(default = "default_n_max")]
        n_max: usize,
    },
}

impl MethodConfig {
    pub fn tag(&self) -> MethodTag {
        match self {
            Self::TikhonovApriori { .. } => MethodTag::TikhonovApriori,
            Self::TikhonovDiscrepancy { .. } => MethodTag::TikhonovDiscrepancy,
            Self::TikhonovRelaxed { .. } => MethodTag::TikhonovRelaxed,
            Self::Dsm1 { .. } => MethodTag::Dsm1,
            Self::Dsm2 { .. } => MethodTag::Dsm2,
            Self::Dsm3 { .. } => MethodTag::Dsm3,
            Self::DsmDiscrepancy { .. } => MethodTag::DsmDiscrepancy,
            Self::IterateMin { .. } => MethodTag::IterateMin,
            Self::IterateBalance { .. } => MethodTag::IterateBalance,
        }
    }

    /// Default iteration parameter: √δ scales out with the noise; exact
    /// data falls back to a fixed small value.
    fn iterate_a(a: Option<f64>, delta: f64) -> f64 {
        a.unwrap_or(if delta > 0.0 { delta.sqrt() } else { 1e-3 })
    }

    /// Runs this method once. Methods whose parameter rule needs δ > 0
    /// return the minimal-norm solution on exact data (the report is
    /// tagged `minimal_norm` so the substitution is visible).
    pub fn run(
        &self,
        problem: &ForwardProblem,
        models: &ProblemModels,
        noisy: &NoisyData,
    ) -> regkit_core::Result<SolveReport> {
        let delta = noisy.delta();
        match self {
            Self::TikhonovApriori { gamma } => {
                if delta == 0.0 {
                    return discrepancy_solve_problem(
                        problem,
                        models,
                        noisy,
                        &DiscrepancyConfig::default(),
                    );
                }
                let a = apriori_parameter(delta, *gamma)?;
                Ok(tikhonov(problem.operator(), noisy, a)?.with_error_vs(problem.exact_solution()))
            }
            Self::TikhonovDiscrepancy { c } => {
                discrepancy_solve_problem(problem, models, noisy, &discrepancy_config(*c))
            }
            Self::TikhonovRelaxed { c, b_slack } => {
                if delta == 0.0 {
                    return discrepancy_solve_problem(
                        problem,
                        models,
                        noisy,
                        &DiscrepancyConfig::default(),
                    );
                }
                let mut cfg = discrepancy_config(*c);
                if let Some(b) = b_slack {
                    cfg.b_slack = *b;
                }
                let inner = TruncatedCg::default();
                Ok(
                    relaxed_discrepancy(problem.operator(), noisy, &cfg, &inner)?
                        .with_error_vs(problem.exact_solution()),
                )
            }
            Self::Dsm1 { gamma, mu } => dsm1_solve(problem, models, noisy, *gamma, *mu),
            Self::Dsm2 { schedule } => dsm2_solve(problem, models, noisy, schedule),
            Self::Dsm3 { schedule } => dsm3_solve(problem, models, noisy, schedule),
            Self::DsmDiscrepancy { c, schedule } => {
                dsm_discrepancy_stop(problem, models, noisy, schedule, &discrepancy_config(*c))
            }
            Self::IterateMin { a, n_max } => iterate_solve(
                problem,
                models,
                noisy,
                Self::iterate_a(*a, delta),
                *n_max,
                StoppingRule::Minimize,
            ),
            Self::IterateBalance { a, n_max } => iterate_solve(
                problem,
                models,
                noisy,
                Self::iterate_a(*a, delta),
                *n_max,
                StoppingRule::Balance,
            ),
        }
    }
}

/// A full sweep: one problem, several methods, a decreasing noise
/// ladder, repeated noise draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub deltas: Vec<f64>,
    pub methods: Vec<MethodConfig>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> regkit_core::Result<()> {
        self.problem.validate()?;
        if self.deltas.is_empty() {
            return Err(regkit_core::Error::InvalidConfig(
                "need at least one delta".into(),
            ));
        }
        for pair in self.deltas.windows(2) {
            if pair[1] >= pair[0] || pair[1].is_nan() {
                return Err(regkit_core::Error::InvalidConfig(format!(
                    "deltas must be strictly decreasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if !self.deltas.iter().all(|&d| d > 0.0 && d.is_finite()) {
            return Err(regkit_core::Error::InvalidConfig(
                "deltas must be positive".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(regkit_core::Error::InvalidConfig(
                "need at least one method".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(regkit_core::Error::InvalidConfig(
                "repetitions must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Noise seed of a sweep cell. Methods share cells so they see the
    /// identical noisy data.
    pub fn noise_seed(&self, delta_index: usize, rep: usize) -> u64 {
        self.base_seed
            .wrapping_add(1009 * delta_index as u64)
            .wrapping_add(rep as u64)
    }
}

/// One CSV row of a sweep.
pub struct RateRow {
    pub method: MethodTag,
    pub delta: f64,
    pub rep: usize,
    pub outcome: Result<(f64, f64, f64), String>, // (error, residual, param)
    pub runtime_ms: u128,
}

pub const CSV_HEADER: &str = "method,delta,rep,error,residual,param,runtime_ms";

impl RateRow {
    pub fn to_csv(&self) -> String {
        let (error, residual, param) = match &self.outcome {
            Ok(v) => *v,
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        format!(
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{}",
            self.method, self.delta, self.rep, error, residual, param, self.runtime_ms
        )
    }
}

/// Aggregates over repetitions for one (method, delta) cell.
pub struct RateCell {
    pub delta: f64,
    pub mean_error: f64,
    pub mean_residual: f64,
    pub mean_param: f64,
    pub mean_runtime_ms: f64,
    pub completed: usize,
}

/// Per-method rate summary: one aggregate per noise level plus a
/// least-squares log-log slope when at least four levels are available.
pub struct RateSummary {
    pub method: MethodTag,
    pub cells: Vec<RateCell>,
    pub slope: Option<(f64, f64)>, // (slope, standard error)
}

pub struct SweepOutcome {
    pub rows: Vec<RateRow>,
    pub summaries: Vec<RateSummary>,
    pub failures: usize,
}

/// Runs the sweep on a worker pool and aggregates rates.
pub fn run_sweep(config: &ExperimentConfig) -> regkit_core::Result<SweepOutcome> {
    config.validate()?;
    let problem = Arc::new(generate(&config.problem)?);
    let models = Arc::new(ProblemModels::build(problem.operator())?);

    // noisy data per (delta, rep), shared by every method
    let mut noise_cells: Vec<NoisyData> = Vec::new();
    for (di, &delta) in config.deltas.iter().enumerate() {
        for rep in 0..config.repetitions {
            noise_cells.push(add_noise(&problem, delta, config.noise_seed(di, rep))?);
        }
    }
    let noise_cells = Arc::new(noise_cells);

    let n_deltas = config.deltas.len();
    let reps = config.repetitions;
    let jobs = config.methods.len() * n_deltas * reps;
    let threads = pool::thread_count();

    let rows: Vec<RateRow> = pool::run_indexed(jobs, threads, |index| {
        let method_idx = index / (n_deltas * reps);
        let within = index % (n_deltas * reps);
        let delta_idx = within / reps;
        let rep = within % reps;
        let method = &config.methods[method_idx];
        let noisy = &noise_cells[delta_idx * reps + rep];
        let start = Instant::now();
        let outcome = method
            .run(&problem, &models, noisy)
            .map(|report| {
                (
                    report.error_norm.unwrap_or(f64::NAN),
                    report.residual_norm,
                    report.primary_parameter(),
                )
            })
            .map_err(|e| e.to_string());
        RateRow {
            method: method.tag(),
            delta: config.deltas[delta_idx],
            rep,
            outcome,
            runtime_ms: start.elapsed().as_millis(),
        }
    });

    let failures = rows.iter().filter(|r| r.outcome.is_err()).count();

    let mut summaries = Vec::new();
    for (mi, method) in config.methods.iter().enumerate() {
        let mut cells = Vec::new();
        for (di, &delta) in config.deltas.iter().enumerate() {
            let mut sums = (0.0, 0.0, 0.0, 0.0);
            let mut completed = 0usize;
            for rep in 0..reps {
                let row = &rows[mi * n_deltas * reps + di * reps + rep];
                if let Ok((error, residual, param)) = row.outcome {
                    sums.0 += error;
                    sums.1 += residual;
                    sums.2 += param;
                    sums.3 += row.runtime_ms as f64;
                    completed += 1;
                }
            }
            if completed > 0 {
                let k = completed as f64;
                cells.push(RateCell {
                    delta,
                    mean_error: sums.0 / k,
                    mean_residual: sums.1 / k,
                    mean_param: sums.2 / k,
                    mean_runtime_ms: sums.3 / k,
                    completed,
                });
            }
        }
        let points: Vec<(f64, f64)> = cells.iter().map(|c| (c.delta, c.mean_error)).collect();
        let slope = fit_loglog_slope(&points);
        summaries.push(RateSummary {
            method: method.tag(),
            cells,
            slope,
        });
    }

    Ok(SweepOutcome {
        rows,
        summaries,
        failures,
    })
}

/// Least-squares slope of ln(error) against ln(delta) with its standard
/// error; requires at least four points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 4 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|(d, _)| d.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let std_err = (ss_res / (n - 2.0) / sxx).sqrt();
    Some((slope, std_err))
}
