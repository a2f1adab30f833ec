//! Command-line harness: problem generation, single solves, noise
//! sweeps with rate fitting, the non-uniformity counterexample table,
//! and method comparison reports.

mod experiment;
mod pool;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use regkit_core::dsm::Schedule;
use regkit_core::operators::ForwardProblem;
use regkit_core::problems::{add_noise, counterexample_root, generate, Family, ProblemSpec};
use regkit_core::spectral::ProblemModels;
use regkit_core::variational::{MethodTag, SolveReport};

use experiment::{ExperimentConfig, MethodConfig, CSV_HEADER};

#[derive(Parser)]
#[command(
    name = "regkit",
    version,
    about = "Solvers and experiments for linear ill-posed equations with noisy data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark problem file
    Generate {
        /// Problem family: diagonal_power, hilbert, fredholm_gauss, counterexample
        #[arg(long)]
        family: String,
        /// Problem dimension n
        #[arg(long)]
        size: usize,
        /// Diagonal decay exponent (d_k = k^-p)
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Plant a source condition y = A^gamma z
        #[arg(long = "source-gamma")]
        source_gamma: Option<f64>,
        /// Kernel width of the Gaussian convolution family
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Generator seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output problem file (JSON)
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one problem with one method and print a report
    Solve {
        /// Problem file written by `generate`
        #[arg(long)]
        problem: PathBuf,
        /// Method tag (tikhonov_apriori, tikhonov_discrepancy, tikhonov_relaxed,
        /// dsm1, dsm2, dsm3, dsm_discrepancy, iterate_min, iterate_balance)
        #[arg(long)]
        method: String,
        /// Noise level; 0 solves the exact data
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Noise seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Discrepancy constant (1 < C < 2)
        #[arg(long = "C", default_value_t = 1.5)]
        c: f64,
        /// Certification slack for the relaxed discrepancy principle
        #[arg(long = "b-slack")]
        b_slack: Option<f64>,
        /// Exponent of the a-priori rule a = delta^gamma (also the
        /// constant-parameter flow exponent)
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Stopping-time exponent t = delta^-mu of the constant-parameter flow
        #[arg(long, default_value_t = 0.75)]
        mu: f64,
        /// Power schedule "c0,c1,b" for the time-dependent flows
        #[arg(long, default_value = "1,1,0.75")]
        schedule: String,
        /// Fixed iteration parameter a (default sqrt(delta))
        #[arg(long)]
        a: Option<f64>,
        /// Iteration cap for the stationary iteration
        #[arg(long = "n-max", default_value_t = 10_000)]
        n_max: usize,
        /// Optional machine-readable report (JSON)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep experiment from a config file and write CSV rates
    Rates {
        /// Experiment configuration (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the counterexample where the discrepancy principle is
    /// not uniform over the data: delta, a(delta), delta/sqrt(a)
    Counterexample {
        /// Discrepancy constant (1 < C < 2)
        #[arg(long = "C", default_value_t = 1.5)]
        c: f64,
        /// Comma-separated noise levels
        #[arg(long, default_value = "1e-1,1e-2,1e-3,1e-4")]
        deltas: String,
        /// Series terms before the integral tail correction
        #[arg(long = "J", default_value_t = 1_000_000)]
        j_terms: usize,
        /// Optional CSV output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare several methods on one problem at one noise level
    Compare {
        #[arg(long)]
        problem: PathBuf,
        /// Comma-separated method tags
        #[arg(long)]
        methods: String,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "C", default_value_t = 1.5)]
        c: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.75)]
        mu: f64,
        #[arg(long, default_value = "1,1,0.75")]
        schedule: String,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long = "n-max", default_value_t = 10_000)]
        n_max: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Generate {
            family,
            size,
            p,
            source_gamma,
            sigma,
            seed,
            out,
        } => cmd_generate(&family, size, p, source_gamma, sigma, seed, &out),
        Command::Solve {
            problem,
            method,
            delta,
            seed,
            c,
            b_slack,
            gamma,
            mu,
            schedule,
            a,
            n_max,
            out,
        } => cmd_solve(
            &problem,
            &method,
            delta,
            seed,
            c,
            b_slack,
            gamma,
            mu,
            &schedule,
            a,
            n_max,
            out.as_deref(),
        ),
        Command::Rates { config, out } => cmd_rates(&config, &out),
        Command::Counterexample {
            c,
            deltas,
            j_terms,
            out,
        } => cmd_counterexample(c, &deltas, j_terms, out.as_deref()),
        Command::Compare {
            problem,
            methods,
            delta,
            seed,
            c,
            gamma,
            mu,
            schedule,
            a,
            n_max,
        } => cmd_compare(
            &problem, &methods, delta, seed, c, gamma, mu, &schedule, a, n_max,
        ),
    };
    if let Err(err) = status {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn parse_schedule(text: &str) -> anyhow::Result<Schedule> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("schedule must be 'c0,c1,b', got {text:?}");
    }
    let c0: f64 = parts[0].parse().context("schedule c0")?;
    let c1: f64 = parts[1].parse().context("schedule c1")?;
    let b: f64 = parts[2].parse().context("schedule b")?;
    Ok(Schedule::power(c0, c1, b)?)
}

#[allow(clippy::too_many_arguments)]
fn method_config_from_flags(
    tag: MethodTag,
    c: f64,
    b_slack: Option<f64>,
    gamma: f64,
    mu: f64,
    schedule: &str,
    a: Option<f64>,
    n_max: usize,
) -> anyhow::Result<MethodConfig> {
    Ok(match tag {
        MethodTag::TikhonovApriori => MethodConfig::TikhonovApriori { gamma },
        MethodTag::TikhonovDiscrepancy => MethodConfig::TikhonovDiscrepancy { c },
        MethodTag::TikhonovRelaxed => MethodConfig::TikhonovRelaxed { c, b_slack },
        MethodTag::Dsm1 => MethodConfig::Dsm1 { gamma, mu },
        MethodTag::Dsm2 => MethodConfig::Dsm2 {
            schedule: parse_schedule(schedule)?,
        },
        MethodTag::Dsm3 => MethodConfig::Dsm3 {
            schedule: parse_schedule(schedule)?,
        },
        MethodTag::DsmDiscrepancy => MethodConfig::DsmDiscrepancy {
            c,
            schedule: parse_schedule(schedule)?,
        },
        MethodTag::IterateMin => MethodConfig::IterateMin { a, n_max },
        MethodTag::IterateBalance => MethodConfig::IterateBalance { a, n_max },
        MethodTag::MinimalNorm => bail!("minimal_norm is a fallback, not a requestable method"),
    })
}

fn operator_summary(problem: &ForwardProblem) -> String {
    let op = problem.operator();
    let kind = match op {
        regkit_core::operators::LinearOperator::Dense { .. } => "dense",
        regkit_core::operators::LinearOperator::Diagonal { .. } => "diagonal",
        regkit_core::operators::LinearOperator::Symmetric { .. } => "symmetric",
    };
    format!("{kind} {}x{}", op.rows(), op.cols())
}

fn cmd_generate(
    family: &str,
    size: usize,
    p: f64,
    source_gamma: Option<f64>,
    sigma: f64,
    seed: u64,
    out: &std::path::Path,
) -> anyhow::Result<()> {
    let spec = ProblemSpec {
        family: Family::parse(family)?,
        size,
        power_p: p,
        source_condition: source_gamma,
        seed,
        kernel_width: sigma,
    };
    let problem = generate(&spec)?;
    problem
        .save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote {} ({}, seed {})",
        out.display(),
        operator_summary(&problem),
        seed
    );
    Ok(())
}

fn print_report(
    problem_name: &str,
    problem: &ForwardProblem,
    delta: f64,
    seed: u64,
    report: &SolveReport,
) {
    println!(
        "problem      {problem_name} ({})",
        operator_summary(problem)
    );
    println!("method       {}", report.method);
    println!("delta        {delta:.6e}  (seed {seed})");
    println!("a chosen     {:.12e}", report.a_chosen);
    match report.t_chosen {
        Some(t) => println!("t chosen     {t:.12e}"),
        None => println!("t chosen     -"),
    }
    match report.n_chosen {
        Some(n) => println!("n chosen     {n}"),
        None => println!("n chosen     -"),
    }
    println!("residual     {:.12e}", report.residual_norm);
    match report.error_norm {
        Some(e) => println!("error vs y   {e:.12e}"),
        None => println!("error vs y   -"),
    }
    println!("F(u)         {:.12e}", report.f_value);
    println!("iterations   {}", report.inner_iterations);
    if let Some(imag) = report.imaginary_norm() {
        println!("imag norm    {imag:.6e}");
    }
    let preview: Vec<String> = report
        .solution
        .iter()
        .take(8)
        .map(|x| format!("{x:.6e}"))
        .collect();
    let ellipsis = if report.solution.len() > 8 {
        ", ..."
    } else {
        ""
    };
    println!("solution     [{}{}]", preview.join(", "), ellipsis);
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    problem_path: &std::path::Path,
    method: &str,
    delta: f64,
    seed: u64,
    c: f64,
    b_slack: Option<f64>,
    gamma: f64,
    mu: f64,
    schedule: &str,
    a: Option<f64>,
    n_max: usize,
    out: Option<&std::path::Path>,
) -> anyhow::Result<()> {
    let tag: MethodTag = method.parse()?;
    let problem = ForwardProblem::load(problem_path)
        .with_context(|| format!("loading {}", problem_path.display()))?;
    let models = ProblemModels::build(problem.operator())?;
    let noisy = add_noise(&problem, delta, seed)?;
    if delta == 0.0 && !matches!(tag, MethodTag::Dsm1 | MethodTag::Dsm2 | MethodTag::Dsm3) {
        eprintln!(
            "note: delta = 0, parameter choice undefined; methods needing a noise level \
             return the minimal-norm solution"
        );
    }
    let config = method_config_from_flags(tag, c, b_slack, gamma, mu, schedule, a, n_max)?;
    let report = config.run(&problem, &models, &noisy)?;
    print_report(
        &problem_path.display().to_string(),
        &problem,
        delta,
        seed,
        &report,
    );
    if let Some(path) = out {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_rates(config_path: &std::path::Path, out: &std::path::Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config_path.display()))?;
    let outcome = experiment::run_sweep(&config)?;

    let mut csv = String::with_capacity(64 * (outcome.rows.len() + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for row in &outcome.rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;

    for row in &outcome.rows {
        if let Err(message) = &row.outcome {
            eprintln!(
                "run failed: method={} delta={:.3e} rep={}: {message}",
                row.method, row.delta, row.rep
            );
        }
    }

    println!("wrote {} ({} rows)", out.display(), outcome.rows.len());
    println!(
        "{:<22} {:>11} {:>13} {:>13} {:>13} {:>8} {:>5}",
        "method", "delta", "mean_error", "mean_residual", "mean_param", "ms", "runs"
    );
    for summary in &outcome.summaries {
        for cell in &summary.cells {
            println!(
                "{:<22} {:>11.4e} {:>13.6e} {:>13.6e} {:>13.6e} {:>8.1} {:>5}",
                summary.method.to_string(),
                cell.delta,
                cell.mean_error,
                cell.mean_residual,
                cell.mean_param,
                cell.mean_runtime_ms,
                cell.completed
            );
        }
    }
    println!("{:<22} {:>9} {:>9}", "method", "slope", "stderr");
    for summary in &outcome.summaries {
        let (slope_s, stderr_s) = match summary.slope {
            Some((s, se)) => (format!("{s:.3}"), format!("{se:.3}")),
            None => ("n/a".into(), "n/a".into()),
        };
        println!(
            "{:<22} {:>9} {:>9}",
            summary.method.to_string(),
            slope_s,
            stderr_s
        );
    }
    if outcome.failures > 0 {
        bail!("{} of {} runs failed", outcome.failures, outcome.rows.len());
    }
    Ok(())
}

fn cmd_counterexample(
    c: f64,
    deltas: &str,
    j_terms: usize,
    out: Option<&std::path::Path>,
) -> anyhow::Result<()> {
    let deltas: Vec<f64> = deltas
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("delta {s:?}"))
        })
        .collect::<anyhow::Result<_>>()?;
    if deltas.is_empty() {
        bail!("need at least one delta");
    }
    println!("{:>14} {:>18} {:>16}", "delta", "a(delta)", "delta/sqrt(a)");
    let mut csv = String::from("delta,a,ratio\n");
    let mut last_ratio = f64::NAN;
    for &delta in &deltas {
        let (a, ratio) = counterexample_root(j_terms, c, delta)?;
        println!("{delta:>14.6e} {a:>18.10e} {ratio:>16.10}");
        csv.push_str(&format!("{delta:.16e},{a:.16e},{ratio:.16e}\n"));
        last_ratio = ratio;
    }
    println!(
        "ratio stays bounded below; last value {:.6} vs 1/C = {:.6}",
        last_ratio,
        1.0 / c
    );
    if let Some(path) = out {
        std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    problem_path: &std::path::Path,
    methods: &str,
    delta: f64,
    seed: u64,
    c: f64,
    gamma: f64,
    mu: f64,
    schedule: &str,
    a: Option<f64>,
    n_max: usize,
) -> anyhow::Result<()> {
    let problem = ForwardProblem::load(problem_path)
        .with_context(|| format!("loading {}", problem_path.display()))?;
    let models = ProblemModels::build(problem.operator())?;
    let noisy = add_noise(&problem, delta, seed)?;
    let tags: Vec<MethodTag> = methods
        .split(',')
        .map(|s| s.trim().parse::<MethodTag>())
        .collect::<regkit_core::Result<_>>()?;

    println!(
        "comparing {} methods on {} at delta {delta:.3e} (seed {seed})",
        tags.len(),
        problem_path.display()
    );
    println!(
        "{:<22} {:>14} {:>14} {:>14} {:>9}",
        "method", "param", "residual", "error", "ms"
    );
    let mut failures = 0;
    for tag in tags {
        let config = method_config_from_flags(tag, c, None, gamma, mu, schedule, a, n_max)?;
        let start = std::time::Instant::now();
        match config.run(&problem, &models, &noisy) {
            Ok(report) => {
                println!(
                    "{:<22} {:>14.6e} {:>14.6e} {:>14.6e} {:>9}",
                    report.method.to_string(),
                    report.primary_parameter(),
                    report.residual_norm,
                    report.error_norm.unwrap_or(f64::NAN),
                    start.elapsed().as_millis()
                );
            }
            Err(err) => {
                println!("{:<22} failed: {err}", tag.to_string());
                failures += 1;
            }
        }
    }
    if failures > 0 {
        bail!("{failures} methods failed");
    }
    let _ = std::io::stdout().flush();
    Ok(())
}
