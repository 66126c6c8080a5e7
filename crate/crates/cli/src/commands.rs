use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sparse_leakage::limits::{ClauseStatus, ClauseVerdict, SATURATION_TOL};
use sparse_leakage::mechanism::{DEFAULT_EPSILON_CAP, SAFETY_FACTOR};
use sparse_leakage::rounding::{envelope_from_sweep, round_solution};
use sparse_leakage::sdp::SdpSolution;
use sparse_leakage::{
    approx_utility, build_mechanism, build_operator, default_epsilon, leakage_report, linalg,
    max_epsilon, pareto_exact, pareto_gap, random_instance, sdp_envelope, solve_exact, sweep_tau,
    threshold_report, utility_exact, verify_theorem, Error, JointDistribution, LeakageOperator,
    RoundedSolution, SolverOptions, ThresholdReport,
};

use crate::args::{Common, EpsilonArg};
use crate::svg::{line_chart, Series};
use crate::{
    check_exact_guard, fmt_num, load_instance, to_json, write_file, CliError, InstanceMeta,
    EXIT_NONCONVERGENCE, EXIT_OK, EXIT_VERIFICATION,
};

pub const CSV_HEADER: &str = "N,u_opt,u_sdp_rounded,gap,lambda_star,n_th,tau_th,converged";

#[derive(Clone, Debug, Serialize)]
pub struct InfoReport {
    pub instance: InstanceMeta,
    pub rcond: f64,
    pub p_x: Vec<f64>,
    pub p_y: Vec<f64>,
    /// Eigenvalues of `A`, ascending.
    pub sigma_sq: Vec<f64>,
    pub lambda_star: f64,
    pub v_star: Vec<f64>,
    pub n_th: usize,
    pub tau_th: f64,
    pub top_simple: bool,
}

pub fn info_report(dist: &JointDistribution, meta: InstanceMeta) -> Result<InfoReport, CliError> {
    let op = build_operator(dist)?;
    let rep = threshold_report(&op.a, &op.p)?;
    Ok(InfoReport {
        instance: meta,
        rcond: dist.rcond(),
        p_x: dist.p_x().to_vec(),
        p_y: dist.p_y().to_vec(),
        sigma_sq: op.sigma_sq.clone(),
        lambda_star: rep.lambda_star,
        v_star: rep.v_star,
        n_th: rep.n_th,
        tau_th: rep.tau_th,
        top_simple: rep.top_simple,
    })
}

pub fn info(common: &Common) -> Result<i32, CliError> {
    let (dist, meta) = load_instance(common)?;
    let report = to_json(&info_report(&dist, meta)?);
    if let (Some(dir), true) = (&common.out, common.formats.json) {
        write_file(dir, "info.json", &report)?;
    }
    print!("{report}");
    Ok(EXIT_OK)
}

fn budgets(common: &Common, k: usize) -> Result<(usize, usize), CliError> {
    let (lo, hi) = common.n_range.map_or((1, k), |r| (r.lo, r.hi));
    if hi > k {
        return Err(Error::InvalidBudget { n: hi, k }.into());
    }
    Ok((lo, hi))
}

#[derive(Clone, Debug, Serialize)]
pub struct ParetoRow {
    pub n: usize,
    pub u_opt: Option<f64>,
    pub u_sdp_rounded: Option<f64>,
    pub gap: Option<f64>,
    pub lambda_star: f64,
    pub n_th: usize,
    pub tau_th: f64,
    pub converged: bool,
    pub exact_support: Option<Vec<usize>>,
    pub rounded_support: Option<Vec<usize>>,
    pub source_tau: Option<f64>,
    /// `½ ε² u_opt`
    pub utility_opt: Option<f64>,
    /// `½ ε² u_sdp_rounded`
    pub utility_sdp: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub objective: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub duality_gap: Option<f64>,
    pub rank_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParetoConfig {
    pub n_range: (usize, usize),
    pub tau_grid: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub polish: bool,
    pub sdp_only: bool,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParetoTable {
    pub instance: InstanceMeta,
    pub config: ParetoConfig,
    pub rows: Vec<ParetoRow>,
    pub n_th_emp: Option<usize>,
    pub sweep: Vec<SweepPoint>,
}

impl ParetoTable {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.n,
                opt(r.u_opt),
                opt(r.u_sdp_rounded),
                opt(r.gap),
                fmt_num(r.lambda_star),
                r.n_th,
                fmt_num(r.tau_th),
                r.converged
            );
        }
        s
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn pareto_svg(&self) -> String {
        let pts = |f: fn(&ParetoRow) -> Option<f64>| -> Vec<(f64, f64)> {
            self.rows.iter().filter_map(|r| f(r).map(|v| (r.n as f64, v))).collect()
        };
        line_chart(
            "Sparse leakage Pareto curve",
            "sparsity budget N",
            "Rayleigh value",
            &[
                Series {
                    name: "exact U_OPT(N)",
                    color: "#1f77b4",
                    points: pts(|r| r.u_opt),
                },
                Series {
                    name: "rounded SDP",
                    color: "#d62728",
                    points: pts(|r| r.u_sdp_rounded),
                },
            ],
        )
    }

    pub fn gap_svg(&self) -> String {
        let points = self
            .rows
            .iter()
            .filter_map(|r| r.gap.map(|g| (r.n as f64, g)))
            .collect();
        line_chart(
            "Pareto gap",
            "sparsity budget N",
            "gap",
            &[Series {
                name: "U_OPT - rounded",
                color: "#2ca02c",
                points,
            }],
        )
    }
}

fn sweep_summary(sweep: &[(f64, Result<SdpSolution, Error>)]) -> Vec<SweepPoint> {
    sweep
        .iter()
        .map(|(tau, r)| match r {
            Ok(s) => SweepPoint {
                tau: *tau,
                objective: Some(s.objective),
                converged: s.converged,
                iterations: s.iterations,
                duality_gap: Some(s.duality_gap),
                rank_gap: Some(s.rank_gap),
                error: None,
            },
            Err(e) => SweepPoint {
                tau: *tau,
                objective: None,
                converged: false,
                iterations: 0,
                duality_gap: None,
                rank_gap: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn run_sweep(
    op: &LeakageOperator,
    opts: &SolverOptions,
) -> Result<Vec<(f64, Result<SdpSolution, Error>)>, CliError> {
    let grid = opts.tau_grid.values(op.k());
    let results = sweep_tau(&op.a, &op.p, &grid, opts)?;
    Ok(grid.into_iter().zip(results).collect())
}

/// Computes the full Pareto table without touching the filesystem.
pub fn pareto_table(common: &Common) -> Result<ParetoTable, CliError> {
    let (dist, meta) = load_instance(common)?;
    let k = dist.k();
    check_exact_guard(k, common.sdp_only)?;
    let (lo, hi) = budgets(common, k)?;
    let opts = common.solver_options()?;
    let op = build_operator(&dist)?;
    let rep = threshold_report(&op.a, &op.p)?;
    let epsilon = match common.epsilon {
        EpsilonArg::Value(e) => e,
        EpsilonArg::Auto => DEFAULT_EPSILON_CAP,
    };
    let half_eps_sq = 0.5 * epsilon * epsilon;

    let curve = if common.sdp_only {
        None
    } else {
        Some(pareto_exact(&op.a, &op.p, hi)?)
    };
    let sweep = run_sweep(&op, &opts)?;
    let converged: Vec<SdpSolution> = sweep
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .filter(|s| s.converged)
        .cloned()
        .collect();
    let sweep_ok = converged.len() == sweep.len();

    let mut envelopes: Vec<(usize, Option<RoundedSolution>)> = Vec::new();
    let mut rows = Vec::new();
    for n in lo..=hi {
        let (env, row_ok) = if n < 2 {
            (None, true)
        } else {
            match envelope_from_sweep(&op.a, &op.p, n, &converged, common.polish) {
                Ok(r) => (Some(r), sweep_ok),
                Err(Error::NoConvergedPoints) => (None, false),
                Err(e) => return Err(e.into()),
            }
        };
        let exact = curve.as_ref().and_then(|c| c.rows.iter().find(|r| r.n_budget == n));
        let u_opt = exact.map(|e| e.value);
        let u_sdp = if n < 2 { Some(0.0) } else { env.as_ref().map(|e| e.value) };
        let gap = match (u_opt, u_sdp) {
            (Some(a), Some(b)) if row_ok => Some(a - b),
            _ => None,
        };
        rows.push(ParetoRow {
            n,
            u_opt,
            u_sdp_rounded: u_sdp,
            gap,
            lambda_star: rep.lambda_star,
            n_th: rep.n_th,
            tau_th: rep.tau_th,
            converged: row_ok,
            exact_support: exact.map(|e| e.support.clone()),
            rounded_support: env.as_ref().map(|e| e.support.clone()),
            source_tau: env.as_ref().and_then(|e| e.source_tau),
            utility_opt: u_opt.map(|v| half_eps_sq * v),
            utility_sdp: u_sdp.map(|v| half_eps_sq * v),
        });
        envelopes.push((n, env));
    }

    let n_th_emp = match &curve {
        Some(c) if lo == 1 && rows.iter().all(|r| r.converged) => pareto_gap(c, &envelopes)?.n_th_emp,
        _ => None,
    };

    Ok(ParetoTable {
        instance: meta,
        config: ParetoConfig {
            n_range: (lo, hi),
            tau_grid: sweep.iter().map(|(t, _)| *t).collect(),
            tolerance: opts.tolerance,
            max_iterations: opts.max_iterations,
            polish: common.polish,
            sdp_only: common.sdp_only,
            epsilon,
        },
        rows,
        n_th_emp,
        sweep: sweep_summary(&sweep),
    })
}

pub fn pareto(common: &Common) -> Result<i32, CliError> {
    let table = pareto_table(common)?;
    let csv = table.to_csv();
    match &common.out {
        Some(dir) => {
            if common.formats.csv {
                write_file(dir, "pareto.csv", &csv)?;
            }
            if common.formats.svg {
                write_file(dir, "pareto.svg", &table.pareto_svg())?;
                write_file(dir, "gap.svg", &table.gap_svg())?;
            }
            if common.formats.json {
                write_file(dir, "pareto.json", &to_json(&table))?;
            }
        }
        None => print!("{csv}"),
    }
    if table.all_converged() {
        Ok(EXIT_OK)
    } else {
        let bad: Vec<usize> = table.rows.iter().filter(|r| !r.converged).map(|r| r.n).collect();
        eprintln!("solver did not converge for budgets {bad:?}");
        Ok(EXIT_NONCONVERGENCE)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdicts {
    pub l0: bool,
    pub chi2: bool,
    pub mixture: bool,
    pub epsilon_in_range: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MechanismReport {
    pub instance: InstanceMeta,
    pub n_budget: usize,
    pub method: &'static str,
    pub epsilon: f64,
    pub epsilon_max: f64,
    pub direction: Vec<f64>,
    pub support: Vec<usize>,
    /// `lᵀ A l`
    pub rayleigh_value: f64,
    pub i_exact_nats: f64,
    pub i_exact_bits: f64,
    pub i_approx_nats: f64,
    pub relative_error: f64,
    pub leakage: sparse_leakage::mechanism::LeakageReport,
    pub verdicts: Verdicts,
    pub all_pass: bool,
}

#[derive(Clone, Debug, Serialize)]
struct MechanismOutput {
    instance: InstanceMeta,
    #[serde(flatten)]
    mechanism: sparse_leakage::mechanism::MechanismFile,
}

pub fn mechanism_report(
    common: &Common,
    n_budget: usize,
) -> Result<(MechanismReport, sparse_leakage::mechanism::MechanismFile), CliError> {
    let (dist, meta) = load_instance(common)?;
    let k = dist.k();
    if n_budget < 2 {
        return Err(Error::BudgetTooSmall { n: n_budget }.into());
    }
    if n_budget > k {
        return Err(Error::InvalidBudget { n: n_budget, k }.into());
    }
    check_exact_guard(k, common.sdp_only)?;
    let op = build_operator(&dist)?;
    let (l, support, method) = if common.sdp_only {
        let opts = common.solver_options()?;
        let grid = opts.tau_grid.values(k);
        let r = sdp_envelope(&op.a, &op.p, n_budget, &grid, &opts, common.polish)?;
        (r.l_hat, r.support, "sdp")
    } else {
        let s = solve_exact(&op.a, &op.p, n_budget)?;
        (s.l, s.support, "exact")
    };
    let epsilon = match common.epsilon {
        EpsilonArg::Auto => default_epsilon(&l, &dist)?,
        EpsilonArg::Value(e) => e,
    };
    let eps_max = max_epsilon(&l, &dist)?;
    let mech = build_mechanism(&l, &dist, epsilon)?;
    let exact = utility_exact(&mech, &dist);
    let approx = approx_utility(&l, &op, epsilon);
    let leakage = leakage_report(&mech, &dist, n_budget)?;
    let verdicts = Verdicts {
        l0: leakage.outputs.iter().all(|o| o.constraints.l0_ok),
        chi2: leakage.outputs.iter().all(|o| o.constraints.chi2_ok),
        mixture: leakage.mixture_residual <= 1e-12,
        epsilon_in_range: epsilon <= SAFETY_FACTOR * eps_max,
    };
    let all_pass = verdicts.l0 && verdicts.chi2 && verdicts.mixture && verdicts.epsilon_in_range;
    let report = MechanismReport {
        instance: meta,
        n_budget,
        method,
        epsilon,
        epsilon_max: eps_max,
        rayleigh_value: op.a.quad_form(&l),
        direction: l,
        support,
        i_exact_nats: exact,
        i_exact_bits: exact / std::f64::consts::LN_2,
        i_approx_nats: approx,
        relative_error: if approx > 0.0 { (exact - approx).abs() / approx } else { 0.0 },
        leakage,
        verdicts,
        all_pass,
    };
    Ok((report, mech.to_file()))
}

pub fn mechanism(common: &Common, n_budget: usize) -> Result<i32, CliError> {
    let (report, file) = mechanism_report(common, n_budget)?;
    let text = to_json(&report);
    if let Some(dir) = &common.out {
        let out = MechanismOutput {
            instance: report.instance.clone(),
            mechanism: file,
        };
        write_file(dir, "mechanism.json", &to_json(&out))?;
        write_file(dir, "mechanism_report.json", &text)?;
    }
    print!("{text}");
    if report.all_pass {
        Ok(EXIT_OK)
    } else {
        eprintln!("mechanism constraint verification failed");
        Ok(EXIT_VERIFICATION)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub instance: InstanceMeta,
    pub lambda_star: f64,
    pub n_th: usize,
    pub tau_th: f64,
    pub top_simple: bool,
    pub clauses: Vec<ClauseVerdict>,
    pub all_pass: bool,
}

fn clause(name: &'static str, ok: bool, slack: f64, detail: String) -> ClauseVerdict {
    ClauseVerdict::new(name, ok, slack, detail)
}

fn invariant_clauses(
    dist: &JointDistribution,
    op: &LeakageOperator,
    rep: &ThresholdReport,
    curve: &sparse_leakage::ParetoCurve,
    sweep: &[SdpSolution],
) -> Result<Vec<ClauseVerdict>, CliError> {
    let k = dist.k();
    let lam = rep.lambda_star;
    let scale = lam.abs().max(1.0);
    let mut out = Vec::new();

    let fixed = linalg::max_abs(&linalg::sub(&op.a.matvec(&op.p), &op.p));
    out.push(clause(
        "stationary vector",
        fixed <= 1e-10,
        fixed,
        format!("‖A√P_X − √P_X‖∞ = {fixed:.3e}"),
    ));
    let floor = (op.sigma_sq[0] - 1.0).abs();
    out.push(clause(
        "unit singular floor",
        floor <= 1e-8,
        floor,
        format!("smallest eigenvalue of A is {}", op.sigma_sq[0]),
    ));
    let u1 = curve.value_at(1).unwrap_or(f64::NAN);
    out.push(clause(
        "one-sparse infeasibility",
        u1 == 0.0,
        u1.abs(),
        format!("U_OPT(1) = {u1}"),
    ));
    let drop = curve
        .rows
        .windows(2)
        .map(|w| w[0].value - w[1].value)
        .fold(0.0f64, f64::max);
    let over = curve.rows.iter().map(|r| r.value - lam).fold(f64::NEG_INFINITY, f64::max);
    out.push(clause(
        "monotone curve",
        drop <= 1e-10 * scale && over <= SATURATION_TOL * scale,
        drop.max(over.max(0.0)),
        format!("largest decrease {drop:.3e}; max U_OPT(N) − λ* = {over:.3e}"),
    ));

    let mut worst = f64::NEG_INFINITY;
    let mut rounded = 0usize;
    for row in curve.rows.iter().filter(|r| r.n_budget >= 2) {
        for s in sweep.iter().filter(|s| s.converged) {
            match round_solution(&op.a, &s.x, &op.p, row.n_budget) {
                Ok(r) => {
                    rounded += 1;
                    worst = worst.max(r.value - row.value);
                }
                Err(Error::RoundingCollapsed) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    out.push(clause(
        "rounding sandwich",
        worst <= SATURATION_TOL * scale,
        worst.max(0.0),
        format!("max rounded − U_OPT(N) over {rounded} roundings = {worst:.3e}"),
    ));

    let mut failures = Vec::new();
    let mut worst_mix: f64 = 0.0;
    for row in curve.rows.iter().filter(|r| r.n_budget >= 2) {
        let eps = default_epsilon(&row.l, dist)?;
        let mech = build_mechanism(&row.l, dist, eps)?;
        let lr = leakage_report(&mech, dist, row.n_budget)?;
        worst_mix = worst_mix.max(lr.mixture_residual);
        if !lr.passes() || lr.mixture_residual > 1e-12 {
            failures.push(row.n_budget);
        }
    }
    out.push(clause(
        "mechanism constraints",
        failures.is_empty(),
        worst_mix,
        format!(
            "budgets 2..={k} at default ε; failing budgets {failures:?}; max mixture residual {worst_mix:.3e}"
        ),
    ));
    Ok(out)
}

pub fn verify_report(common: &Common) -> Result<VerifyReport, CliError> {
    let (dist, meta) = load_instance(common)?;
    let k = dist.k();
    check_exact_guard(k, false)?;
    let opts = common.solver_options()?;
    let op = build_operator(&dist)?;
    let rep = threshold_report(&op.a, &op.p)?;
    let curve = pareto_exact(&op.a, &op.p, k)?;
    let sweep: Vec<SdpSolution> = run_sweep(&op, &opts)?
        .into_iter()
        .map(|(_, r)| r)
        .collect::<Result<_, _>>()?;
    let theorem = verify_theorem(&rep, &curve, &sweep);
    let mut clauses: Vec<ClauseVerdict> = theorem.clauses().into_iter().cloned().collect();
    clauses.extend(invariant_clauses(&dist, &op, &rep, &curve, &sweep)?);
    let all_pass = clauses.iter().all(|c| c.status != ClauseStatus::Fail);
    Ok(VerifyReport {
        instance: meta,
        lambda_star: rep.lambda_star,
        n_th: rep.n_th,
        tau_th: rep.tau_th,
        top_simple: rep.top_simple,
        clauses,
        all_pass,
    })
}

pub fn verify(common: &Common) -> Result<i32, CliError> {
    let report = verify_report(common)?;
    let text = to_json(&report);
    if let (Some(dir), true) = (&common.out, common.formats.json) {
        write_file(dir, "verify.json", &text)?;
    }
    print!("{text}");
    if report.all_pass {
        Ok(EXIT_OK)
    } else {
        for c in report.clauses.iter().filter(|c| !c.ok()) {
            eprintln!("failed clause {}: {}", c.clause, c.detail);
        }
        Ok(EXIT_VERIFICATION)
    }
}

pub fn gen(random: &[u64], out: Option<&Path>, label: Option<String>) -> Result<i32, CliError> {
    let k = usize::try_from(random[0]).map_err(|_| CliError::Usage(format!("bad K {}", random[0])))?;
    let mut dist: JointDistribution = random_instance(k, random[1])?;
    dist.label = label;
    let text = to_json(&dist.to_instance());
    match out {
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| CliError::Usage(format!("bad output path {}", path.display())))?;
            write_file(dir, name, &text)?;
        }
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}
