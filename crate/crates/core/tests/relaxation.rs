use sparse_leakage::limits::at_or_above_threshold;
use sparse_leakage::mechanism::{approx_utility, build_mechanism, utility_exact};
use sparse_leakage::rounding::{envelope_from_sweep, pareto_gap};
use sparse_leakage::{
    build_operator, dual_bound_check, pareto_exact, random_instance, solve_sdp, sweep_tau,
    threshold_report, verify_theorem, Error, JointDistribution, Matrix, SolverOptions,
};

fn fixture() -> JointDistribution {
    JointDistribution::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()
}

#[test]
fn two_letter_relaxation_is_linear_below_threshold() {
    let d = fixture();
    let op = build_operator(&d).unwrap();
    let opts = SolverOptions::default();
    for tau in [0.5, 1.0, 1.5, 2.0, 3.0] {
        let s = solve_sdp(&op.a, &op.p, tau, &opts).unwrap();
        assert!(s.converged);
        let want = f64::min(tau / 2.0, 1.0);
        assert!((s.objective - want).abs() < 1e-6, "tau {tau}: {}", s.objective);
        assert!(s.rank_gap < 1e-6);
    }
}

#[test]
fn threshold_budget_saturates_relaxation() {
    for seed in 0..3 {
        let d = random_instance::<f64>(5, seed).unwrap();
        let op = build_operator(&d).unwrap();
        let rep = threshold_report(&op.a, &op.p).unwrap();
        let opts = SolverOptions::default();
        let grid = [0.5 * rep.tau_th, rep.tau_th, 0.5 * (rep.tau_th + 5.0), 5.0];
        let sweep: Vec<_> = sweep_tau(&op.a, &op.p, &grid, &opts)
            .unwrap()
            .into_iter()
            .map(Result::unwrap)
            .collect();
        for s in &sweep {
            assert!(s.converged);
            assert!(dual_bound_check(s, rep.lambda_star));
            if at_or_above_threshold(s.tau, rep.tau_th) {
                assert!((s.objective - rep.lambda_star).abs() <= 1e-6);
                let vv = Matrix::outer(&rep.v_star, &rep.v_star);
                assert!(s.x.sub(&vv).frobenius_norm() <= 1e-5);
            }
        }
        assert!(sweep[0].objective < rep.lambda_star - 1e-6);
        for w in sweep.windows(2) {
            assert!(w[1].objective >= w[0].objective - 1e-6);
        }
        let curve = pareto_exact(&op.a, &op.p, 5).unwrap();
        assert!(verify_theorem(&rep, &curve, &sweep).all_pass());
    }
}

#[test]
fn cold_and_warm_sweeps_agree() {
    let d = random_instance::<f64>(5, 21).unwrap();
    let op = build_operator(&d).unwrap();
    let grid: Vec<f64> = (1..=9).map(|i| 0.5 * i as f64 + 0.5).collect();
    let warm = SolverOptions::default();
    let cold = SolverOptions {
        warm_start: false,
        ..SolverOptions::default()
    };
    let a = sweep_tau(&op.a, &op.p, &grid, &warm).unwrap();
    let b = sweep_tau(&op.a, &op.p, &grid, &cold).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
        assert!((x.objective - y.objective).abs() <= 1e-6 * x.objective.max(1.0));
    }
}

#[test]
fn envelope_never_exceeds_exact_curve() {
    let d = random_instance::<f64>(6, 2).unwrap();
    let op = build_operator(&d).unwrap();
    let opts = SolverOptions::default();
    let grid = opts.tau_grid.values(6);
    let sweep: Vec<_> = sweep_tau(&op.a, &op.p, &grid, &opts)
        .unwrap()
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let curve = pareto_exact(&op.a, &op.p, 6).unwrap();
    let mut envs = vec![(1, None)];
    for n in 2..=6 {
        envs.push((n, Some(envelope_from_sweep(&op.a, &op.p, n, &sweep, false).unwrap())));
    }
    let gap = pareto_gap(&curve, &envs).unwrap();
    assert!(gap.rows.iter().all(|r| r.gap >= -1e-9));
    assert!(gap.rows.iter().any(|r| r.gap > 1e-4));
    assert_eq!(gap.n_th_emp, Some(6));
    let polished = envelope_from_sweep(&op.a, &op.p, 4, &sweep, true).unwrap();
    assert!(polished.value >= envs[3].1.as_ref().unwrap().value);
}

#[test]
fn mechanism_matches_binary_entropy() {
    let d = fixture();
    let op = build_operator(&d).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let l = [h, -h];
    let m = build_mechanism(&l, &d, 0.1).unwrap();
    let q: f64 = 0.55;
    let oracle = std::f64::consts::LN_2 + q * q.ln() + (1.0 - q) * (1.0 - q).ln();
    let exact = utility_exact(&m, &d);
    assert!((exact - oracle).abs() < 1e-15);
    assert!((exact - 0.005008).abs() < 1e-5);
    assert!((approx_utility(&l, &op, 0.1) - 0.005).abs() < 1e-15);
}

#[test]
fn approximation_error_shrinks_with_epsilon() {
    for seed in 0..5 {
        let d = random_instance::<f64>(5, seed).unwrap();
        let op = build_operator(&d).unwrap();
        let l = sparse_leakage::solve_exact(&op.a, &op.p, 3).unwrap().l;
        let e0 = sparse_leakage::mechanism::default_epsilon(&l, &d).unwrap();
        let errs: Vec<f64> = [e0, e0 / 2.0, e0 / 4.0]
            .iter()
            .map(|&e| {
                let m = build_mechanism(&l, &d, e).unwrap();
                let approx = approx_utility(&l, &op, e);
                (utility_exact(&m, &d) - approx).abs() / approx
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "seed {seed}: {errs:?}");
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let d = fixture();
    let op = build_operator(&d).unwrap();
    assert!(matches!(
        solve_sdp(&op.a, &op.p, 0.0, &SolverOptions::default()),
        Err(Error::InvalidTau(_))
    ));
    assert!(matches!(
        sweep_tau(&op.a, &op.p, &[2.0, 1.0], &SolverOptions::default()),
        Err(Error::InvalidGrid)
    ));
    let singular = JointDistribution::<f64>::from_rows(&[vec![0.25, 0.25], vec![0.25, 0.25]]);
    assert!(matches!(singular, Err(Error::SingularLeakage { .. })));
}
