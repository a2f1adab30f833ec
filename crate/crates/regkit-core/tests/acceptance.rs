//! Acceptance suite: one test per criterion, each printing a PASS line
//! after its assertions. Tolerances are pinned in the assertions.

use regkit_core::dsm::{
    default_step, dsm1_closed_form, dsm1_integrate, dsm1_solve, dsm2_state, dsm3_integrate,
    dsm3_state, dsm_discrepancy_stop, Schedule,
};
use regkit_core::iterative::{error_decay, iterate, stopping_balance, stopping_minimize};
use regkit_core::operators::{
    solve_regularized, solve_shifted_selfadjoint, ForwardProblem, LinearOperator, NoisyData,
};
use regkit_core::problems::{add_noise, counterexample_root, generate, Family, ProblemSpec};
use regkit_core::spectral::{
    decompose, decompose_data_gram, decompose_selfadjoint, regularization_bias,
    solution_operator_norm, ProblemModels,
};
use regkit_core::variational::{
    discrepancy_parameter, relaxed_discrepancy, tikhonov, DiscrepancyConfig, ExactMinimizer,
    TruncatedCg,
};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

struct XorShift(u64);

impl XorShift {
    fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 as f64 / u64::MAX as f64) - 0.5
    }
    fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| self.next()).collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        v
    }
    fn dense(&mut self, rows: usize, cols: usize) -> LinearOperator {
        let entries: Vec<f64> = (0..rows * cols).map(|_| self.next()).collect();
        LinearOperator::dense(rows, cols, entries).unwrap()
    }
}

fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn hilbert_problem(n: usize, seed: u64) -> ForwardProblem {
    let mut spec = ProblemSpec::new(Family::Hilbert, n);
    spec.seed = seed;
    generate(&spec).unwrap()
}

/// Criterion 1: dynamical solver rate O(δ^{1/2}) under a source condition.
#[test]
fn criterion_01_dsm1_rate_under_source_condition() {
    let mut spec = ProblemSpec::new(Family::DiagonalPower, 200);
    spec.power_p = 0.5; // T-eigenvalues 1/k
    spec.source_condition = Some(1.0); // y = A z, ‖z‖ = 1
    spec.seed = 11;
    let problem = generate(&spec).unwrap();
    let models = ProblemModels::build(problem.operator()).unwrap();

    let deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let mut log_d = Vec::new();
    let mut log_e = Vec::new();
    for &delta in &deltas {
        let mut errors = Vec::new();
        for seed in [1u64, 2, 3] {
            let noisy = add_noise(&problem, delta, seed).unwrap();
            let report = dsm1_solve(&problem, &models, &noisy, 0.5, 0.75).unwrap();
            errors.push(report.error_norm.unwrap());
        }
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        log_d.push(delta.ln());
        log_e.push(mean.ln());
    }
    let slope = fitted_slope(&log_d, &log_e);
    assert!(
        (0.35..=0.65).contains(&slope),
        "fitted log-log slope {slope} outside [0.35, 0.65]"
    );
    println!("acceptance 01 dsm1 rate under source condition: PASS (slope {slope:.3})");
}

/// Criterion 2: the solution-operator norm never exceeds 1/(2√a), with
/// equality when s = a lies in the spectrum.
#[test]
fn criterion_02_solution_operator_norm_bound() {
    let mut rng = XorShift::new(222);
    for trial in 0..50 {
        let rows = 3 + (trial % 5);
        let cols = 3 + ((trial * 7) % 5);
        let op = rng.dense(rows, cols);
        let model = decompose(&op).unwrap();
        for a in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
            let g = solution_operator_norm(&model, a).unwrap();
            assert!(
                g <= 0.5 / a.sqrt() + 1e-12,
                "norm bound violated: {g} > {}",
                0.5 / a.sqrt()
            );
        }
    }
    // constructed equality case: spectrum contains s = a exactly
    for a in [1e-4f64, 1e-2, 0.5, 1.0] {
        let op = LinearOperator::diagonal(vec![a.sqrt(), 2.0 * a.sqrt()]).unwrap();
        let model = decompose(&op).unwrap();
        let g = solution_operator_norm(&model, a).unwrap();
        assert!(
            (g - 0.5 / a.sqrt()).abs() <= 1e-12 * (0.5 / a.sqrt()),
            "equality case off at a={a}: {g}"
        );
    }
    println!("acceptance 02 solution-operator norm bound: PASS");
}

/// Criterion 3: the two routes through the commutation identity agree:
/// (T+aI)⁻¹Aᵀv = Aᵀ(Q+aI)⁻¹v.
#[test]
fn criterion_03_commutation_identity() {
    let mut rng = XorShift::new(333);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let rows = 3 + (trial % 6);
        let cols = 3 + ((trial * 5) % 6);
        let op = rng.dense(rows, cols);
        let a = 10f64.powf(-3.0 * (0.5 + rng.next()).clamp(0.0, 1.0));
        let v: Vec<f64> = (0..rows).map(|_| rng.next()).collect();

        let left = solve_regularized(&op, a, &op.apply_adjoint(&v).unwrap()).unwrap();
        let q = op.data_gram();
        let right = op
            .apply_adjoint(&solve_shifted_selfadjoint(&q, a, &v).unwrap())
            .unwrap();
        let gap = norm(&sub(&left, &right)) / norm(&v).max(1e-300);
        worst = worst.max(gap);
        assert!(gap <= 1e-9, "commutation gap {gap:.3e} at trial {trial}");
    }
    println!("acceptance 03 commutation identity: PASS (worst gap {worst:.3e})");
}

/// Criterion 4: classical discrepancy principle on the Hilbert problem.
#[test]
fn criterion_04_discrepancy_principle() {
    let problem = hilbert_problem(10, 4);
    let model_q = decompose_data_gram(problem.operator()).unwrap();
    let y_norm = norm(problem.exact_solution());

    // h strictly increasing on a 50-point log grid
    let noisy_mid = add_noise(&problem, 1e-3, 40).unwrap();
    let q_max = model_q.max_eigenvalue();
    let mut last = -1.0;
    for k in 0..50 {
        let a = q_max * 10f64.powf(-6.0 + 8.0 * k as f64 / 49.0);
        let h = regkit_core::spectral::discrepancy_function(&model_q, noisy_mid.data(), a).unwrap();
        assert!(h > last, "h not strictly increasing at a={a:.3e}");
        last = h;
    }

    let cfg = DiscrepancyConfig::default(); // C = 1.5, root_tol 1e-10
    let mut last_a = f64::INFINITY;
    let mut last_err = f64::INFINITY;
    for &delta in &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        let noisy = add_noise(&problem, delta, 40).unwrap();
        let a = discrepancy_parameter(&model_q, &noisy, &cfg).unwrap();
        // root located to 1e-10 relative: h brackets the target there
        let target = (cfg.c * noisy.delta()).powi(2);
        let h_lo =
            regkit_core::spectral::discrepancy_function(&model_q, noisy.data(), a * (1.0 - 3e-10))
                .unwrap();
        let h_hi =
            regkit_core::spectral::discrepancy_function(&model_q, noisy.data(), a * (1.0 + 3e-10))
                .unwrap();
        assert!(
            h_lo <= target && target <= h_hi,
            "root not within 1e-10 relative at δ={delta}"
        );
        assert!(a < last_a, "a(δ) not strictly decreasing at δ={delta}");
        last_a = a;

        let report = tikhonov(problem.operator(), &noisy, a).unwrap();
        let err = norm(&sub(&report.solution, problem.exact_solution()));
        assert!(err < last_err, "error not decreasing at δ={delta}");
        last_err = err;
        assert!(
            norm(&report.solution) <= y_norm * (1.0 + 1e-10),
            "‖u_δ‖ exceeds ‖y‖ at δ={delta}"
        );
    }
    println!("acceptance 04 discrepancy principle: PASS");
}

/// Criterion 5: relaxed discrepancy principle with a certified
/// truncated inner solver, and agreement of the exact-inner route with
/// the classical roots.
#[test]
fn criterion_05_relaxed_discrepancy() {
    let problem = hilbert_problem(10, 5);
    let model_q = decompose_data_gram(problem.operator()).unwrap();
    let cfg = DiscrepancyConfig::default(); // C = 1.5, b_slack = 0.5
    let inner = TruncatedCg::default();
    let mut errors = Vec::new();
    for &delta in &[1e-1, 1e-2, 1e-3, 1e-4] {
        let noisy = add_noise(&problem, delta, 50).unwrap();
        let relaxed = relaxed_discrepancy(problem.operator(), &noisy, &cfg, &inner).unwrap();
        errors.push(norm(&sub(&relaxed.solution, problem.exact_solution())));

        let exact_route =
            relaxed_discrepancy(problem.operator(), &noisy, &cfg, &ExactMinimizer).unwrap();
        let classical = discrepancy_parameter(&model_q, &noisy, &cfg).unwrap();
        assert!(
            (exact_route.a_chosen - classical).abs() <= 1e-8 * classical,
            "exact-inner root {} vs classical {} at δ={delta}",
            exact_route.a_chosen,
            classical
        );
    }
    assert!(
        errors.last().unwrap() < errors.first().unwrap(),
        "relaxed-route errors not decreasing: {errors:?}"
    );
    println!("acceptance 05 relaxed discrepancy: PASS");
}

/// Criterion 6: non-uniformity counterexample: δ/√(a(δ)) stays above
/// 1/2 and approaches 1/C.
#[test]
fn criterion_06_counterexample_ratio() {
    let c = 1.5;
    let mut final_ratio = 0.0;
    for &delta in &[1e-1, 1e-2, 1e-3, 1e-4] {
        let (_, ratio) = counterexample_root(1_000_000, c, delta).unwrap();
        assert!(ratio >= 0.5, "ratio {ratio} below 1/2 at δ={delta}");
        final_ratio = ratio;
    }
    let limit = 1.0 / c;
    assert!(
        (final_ratio - limit).abs() <= 0.05 * limit,
        "final ratio {final_ratio} not within 5% of {limit}"
    );
    println!("acceptance 06 counterexample ratio: PASS (δ=1e-4 ratio {final_ratio:.4})");
}

/// Criterion 7: integrator fidelity against the spectral closed forms,
/// and 4th-order step-halving ratios.
#[test]
fn criterion_07_integrator_fidelity() {
    // constant-parameter complex flow
    let op = LinearOperator::diagonal(vec![1.0, 0.5]).unwrap();
    let model = decompose_selfadjoint(&op).unwrap();
    let g = [0.8, -0.6];
    let a = 0.05;
    let t_end = 50.0;
    let exact = dsm1_closed_form(&model, &g, a, t_end).unwrap();
    let exact_norm = exact.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let traj = dsm1_integrate(&op, &g, a, t_end, default_step(1.0, a)).unwrap();
    let err: f64 = traj
        .terminal_complex()
        .unwrap()
        .iter()
        .zip(&exact)
        .map(|(u, e)| (u - e).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(
        err <= 1e-6 * exact_norm,
        "dsm1 default-step error {err:.3e}"
    );

    // regularized-inverse real flow
    let sched = Schedule::power(1.0, 1.0, 0.75).unwrap();
    let y = [0.7, -0.2];
    let f = op.apply(&y).unwrap();
    let noisy = NoisyData::exact(&f);
    let model_t = decompose(&op).unwrap();
    let gt = op.apply_adjoint(&f).unwrap();
    let t3 = 12.0;
    let closed = dsm3_state(&model_t, &gt, &sched, t3).unwrap();
    let traj3 = dsm3_integrate(&op, &noisy, &sched, t3, default_step(1.0, 1.0)).unwrap();
    let err3 = norm(&sub(traj3.terminal_real().unwrap(), &closed));
    assert!(
        err3 <= 1e-6 * norm(&closed),
        "dsm3 default-step error {err3:.3e}"
    );

    // step-halving ratios on scalar problems
    let op1 = LinearOperator::diagonal(vec![1.0]).unwrap();
    let model1 = decompose_selfadjoint(&op1).unwrap();
    let exact1 = dsm1_closed_form(&model1, &[1.0], 0.1, 5.0).unwrap();
    let err1 = |step: f64| {
        let t = dsm1_integrate(&op1, &[1.0], 0.1, 5.0, step).unwrap();
        (t.terminal_complex().unwrap()[0] - exact1[0]).norm()
    };
    let ratio1 = err1(0.1) / err1(0.05);
    assert!(
        (12.0..=20.0).contains(&ratio1),
        "dsm1 halving ratio {ratio1}"
    );

    let id1 = LinearOperator::identity(1);
    let f1 = [1.0];
    let noisy1 = NoisyData::exact(&f1);
    let model_id = decompose(&id1).unwrap();
    let g1 = id1.apply_adjoint(&f1).unwrap();
    let closed1 = dsm3_state(&model_id, &g1, &sched, 10.0).unwrap();
    let err3s = |step: f64| {
        let t = dsm3_integrate(&id1, &noisy1, &sched, 10.0, step).unwrap();
        (t.terminal_real().unwrap()[0] - closed1[0]).abs()
    };
    let ratio3 = err3s(0.2) / err3s(0.1);
    assert!(
        (12.0..=20.0).contains(&ratio3),
        "dsm3 halving ratio {ratio3}"
    );
    println!("acceptance 07 integrator fidelity: PASS (halving ratios {ratio1:.1}, {ratio3:.1})");
}

/// Criterion 8: noise-propagation bounds along the three flows, on 20
/// random noise draws each.
#[test]
fn criterion_08_noise_propagation_bounds() {
    let op = LinearOperator::diagonal(vec![1.0, 0.5, 0.25, 0.1]).unwrap();
    let flow_model = decompose_selfadjoint(&op).unwrap();
    let model_t = decompose(&op).unwrap();
    let sched = Schedule::power(1.0, 1.0, 0.75).unwrap();
    let delta = 1e-3;
    let a = 0.05;
    let mut rng = XorShift::new(888);

    for _ in 0..20 {
        let mut e = rng.unit_vector(4);
        e.iter_mut().for_each(|x| *x *= delta);

        // constant-parameter flow: gap ≤ 2δ/a
        for t in [0.5, 2.0, 10.0, 100.0] {
            let gap_state = dsm1_closed_form(&flow_model, &e, a, t).unwrap();
            let gap = gap_state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(gap <= 2.0 * delta / a + 1e-9, "flow-1 gap {gap} at t={t}");
        }
        // schedule-driven flow: gap ≤ δ/a(t)
        for t in [1.0, 5.0, 20.0] {
            let gap_state = dsm2_state(&flow_model, &e, &sched, t).unwrap();
            let gap = gap_state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(
                gap <= delta / sched.value(t) + 1e-9,
                "flow-2 gap {gap} at t={t}"
            );
        }
        // regularized-inverse flow: gap ≤ δ/(2√a(t))
        let g_noise = op.apply_adjoint(&e).unwrap();
        for t in [0.5, 3.0, 15.0] {
            let gap_state = dsm3_state(&model_t, &g_noise, &sched, t).unwrap();
            let gap = norm(&gap_state);
            let bound = delta / (2.0 * sched.value(t).sqrt());
            assert!(gap <= bound + 1e-9, "flow-3 gap {gap} exceeds {bound}");
        }
    }
    println!("acceptance 08 noise-propagation bounds: PASS");
}

/// Criterion 9: stationary iteration convergence on the diagonal
/// benchmark with the spectral error formula tracking the iteration.
#[test]
fn criterion_09_stationary_iteration() {
    let mut spec = ProblemSpec::new(Family::DiagonalPower, 200);
    spec.power_p = 0.5; // T-eigenvalues 1/k, smallest 1/200
    spec.seed = 9;
    let problem = generate(&spec).unwrap();
    let models = ProblemModels::build(problem.operator()).unwrap();
    let a = 1.0 / 200.0;
    let noisy = NoisyData::exact(problem.exact_data());
    let u1 = vec![0.0; 200];
    let n_max = 35;
    let state = iterate(
        problem.operator(),
        &models,
        &noisy,
        a,
        &u1,
        n_max,
        Some(problem.exact_solution()),
    )
    .unwrap();
    let hist = state.error_history.unwrap();
    let mut below = None;
    for (n, pair) in hist.windows(2).enumerate() {
        assert!(
            pair[1] <= pair[0] * (1.0 + 1e-12),
            "error increased at step {n}"
        );
    }
    for (n, &e) in hist.iter().enumerate() {
        if e < 1e-6 {
            below = Some(n);
            break;
        }
    }
    let below = below.expect("error never fell below 1e-6");
    assert!(below <= 10_000, "needed {below} iterations");

    // spectral E(n) matches the measured error
    let w: Vec<f64> = problem.exact_solution().iter().map(|x| -x).collect();
    for (n, &measured) in hist.iter().enumerate() {
        let predicted = error_decay(models.gram(), &w, a, n).unwrap();
        assert!(
            (measured - predicted).abs() <= 1e-10,
            "spectral mismatch at n={n}: {measured} vs {predicted}"
        );
    }
    println!("acceptance 09 stationary iteration: PASS (below 1e-6 at n={below})");
}

/// Criterion 10: stopping rules reproduce the exhaustive-scan values on
/// the scalar benchmark and grow as the noise shrinks.
#[test]
fn criterion_10_stopping_rules() {
    let model = decompose(&LinearOperator::identity(1)).unwrap();
    let w = [1.0];

    // independent exhaustive scans
    let mut scan_min = (0usize, f64::INFINITY);
    for n in 0..=64usize {
        let v = 0.005 * (n as f64 + 1.0) + 2f64.powi(-(n as i32));
        if v < scan_min.1 {
            scan_min = (n, v);
        }
    }
    let mut scan_bal = None;
    for n in 0..=64usize {
        if 2f64.powi(-(n as i32)) <= 0.05 * (n as f64 + 1.0) {
            scan_bal = Some(n);
            break;
        }
    }
    assert_eq!(scan_min.0, 7);
    assert_eq!(scan_bal, Some(3));

    let n_min = stopping_minimize(&model, &w, 0.01, 1.0, 64).unwrap();
    let n_bal = stopping_balance(&model, &w, 0.1, 1.0, 64).unwrap();
    assert_eq!(n_min, scan_min.0);
    assert_eq!(Some(n_bal), scan_bal);

    // n(δ) non-decreasing as δ shrinks over four decades
    let mut last_min = 0;
    let mut last_bal = 0;
    for k in 1..=5 {
        let delta = 10f64.powi(-k);
        let m = stopping_minimize(&model, &w, delta, 1.0, 512).unwrap();
        let b = stopping_balance(&model, &w, delta, 1.0, 512).unwrap();
        assert!(m >= last_min && b >= last_bal, "stopping index shrank");
        last_min = m;
        last_bal = b;
    }
    println!("acceptance 10 stopping rules: PASS (scan values 7 and 3 reproduced)");
}

/// Criterion 11: discrepancy stopping time for the dynamical flow grows
/// as the noise shrinks while the read-off error falls.
#[test]
fn criterion_11_dsm_discrepancy_stopping() {
    // instance where the first stopping parameter sits below the
    // schedule start a(0) = 1, so every sweep point maps to a positive
    // stopping time
    let problem = hilbert_problem(10, 8);
    let models = ProblemModels::build(problem.operator()).unwrap();
    let sched = Schedule::power(1.0, 1.0, 0.75).unwrap();
    let cfg = DiscrepancyConfig::default();
    let mut last_t = 0.0;
    let mut errors = Vec::new();
    for &delta in &[1e-1, 1e-2, 1e-3, 1e-4] {
        let noisy = add_noise(&problem, delta, 60).unwrap();
        let report = dsm_discrepancy_stop(&problem, &models, &noisy, &sched, &cfg).unwrap();
        let t = report.t_chosen.unwrap();
        assert!(t > last_t, "t_δ not strictly increasing at δ={delta}");
        last_t = t;
        errors.push(report.error_norm.unwrap());
    }
    for pair in errors.windows(2) {
        assert!(
            pair[1] < pair[0],
            "read-off error not decreasing: {errors:?}"
        );
    }
    println!("acceptance 11 dsm discrepancy stopping: PASS (t up to {last_t:.3e})");
}

/// Criterion 12: the regularization bias approaches the null-space mass
/// as a → 0, and vanishes for solutions orthogonal to the null space.
#[test]
fn criterion_12_bias_null_space_limit() {
    // planted null component on a rank-deficient diagonal operator
    let op = LinearOperator::diagonal(vec![1.0, 0.5, 0.25, 0.0, 0.0]).unwrap();
    let model = decompose(&op).unwrap();
    assert_eq!(model.null_dimension(), 2);
    let y = [0.3, -0.4, 0.2, 0.5, -0.1];
    let null_mass = (0.5f64 * 0.5 + 0.1 * 0.1).sqrt();
    let eta = regularization_bias(&model, &y, 1e-10).unwrap();
    assert!(
        (eta - null_mass).abs() <= 1e-6,
        "η(1e-10) = {eta}, ‖P_N y‖ = {null_mass}"
    );

    // orthogonal case: the bias vanishes
    let y_perp = [0.3, -0.4, 0.2, 0.0, 0.0];
    let eta_perp = regularization_bias(&model, &y_perp, 1e-10).unwrap();
    assert!(
        eta_perp <= 1e-4 * norm(&y_perp),
        "η(1e-10) = {eta_perp} too large for y ⟂ N"
    );
    println!("acceptance 12 bias null-space limit: PASS");
}
