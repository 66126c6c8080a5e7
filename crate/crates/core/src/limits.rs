//! Spectral ceiling `λ*`, optimal direction `v*`, the saturation thresholds
//! `N_th = ‖v*‖₀` and `τ_th = ‖v*‖₁²`, and clause-by-clause checks of the
//! saturation/tightness/uniqueness theorem on concrete instances.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::ParetoCurve;
use crate::linalg::{self, Matrix};
use crate::scalar::{l0_count, Real};
use crate::sdp::SdpSolution;
use crate::spectral::{eig_sym, fix_sign, project_nullspace};

/// Minimum gap between the two largest eigenvalues on `p^⊥` for the top
/// one to count as simple.
pub const SIMPLE_GAP: f64 = 1e-8;
/// Saturation tolerance on `U_OPT(N) = λ*`.
pub const SATURATION_TOL: f64 = 1e-9;
/// Tolerance on SDP objectives against `λ*`.
pub const SDP_BOUND_TOL: f64 = 1e-6;
/// Bound on `μ₂/μ₁` for a numerically rank-one SDP solution.
pub const RANK_GAP_TOL: f64 = 1e-6;
/// Bound on `‖X − v* v*ᵀ‖_F` when the optimizer is unique.
pub const UNIQUENESS_TOL: f64 = 1e-5;

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdReport<T = f64> {
    pub lambda_star: T,
    pub v_star: Vec<T>,
    pub n_th: usize,
    pub tau_th: T,
    pub top_simple: bool,
}

/// Top eigenpair of `A` restricted to `p^⊥`, plus whether it is simple.
///
/// Decomposes `Π A Π` (with `Π = I − ppᵀ`) and discards the eigenvector
/// most aligned with `p`.
pub fn top_direction<T: Real>(a: &Matrix<T>, p: &[T]) -> Result<(T, Vec<T>, bool)> {
    let k = p.len();
    if k < 2 {
        return Err(Error::NoComplement { n: k });
    }
    let eig = eig_sym(&project_nullspace(a, p))?;
    let aligned = (0..k)
        .map(|i| (i, linalg::dot(&eig.vector(i), p).abs()))
        .fold((0, T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    let kept: Vec<usize> = (0..k).filter(|&i| i != aligned).collect();
    let top = kept[kept.len() - 1];
    let lambda = eig.values[top];
    let simple = match kept.len() {
        1 => true,
        n => lambda - eig.values[kept[n - 2]] > T::lit(SIMPLE_GAP) * lambda.abs().max(T::one()),
    };
    let mut v = linalg::reject_from(&eig.vector(top), p);
    let norm = linalg::norm2(&v);
    v.iter_mut().for_each(|x| *x = *x / norm);
    fix_sign(&mut v);
    Ok((a.rayleigh(&v), v, simple))
}

/// `(‖v‖₀, ‖v‖₁²)` with the crate numeric-zero threshold.
pub fn thresholds<T: Real>(v_star: &[T]) -> (usize, T) {
    let l1 = linalg::norm1(v_star);
    (l0_count(v_star), l1 * l1)
}

pub fn threshold_report<T: Real>(a: &Matrix<T>, p: &[T]) -> Result<ThresholdReport<T>> {
    let (lambda_star, v_star, top_simple) = top_direction(a, p)?;
    let (n_th, tau_th) = thresholds(&v_star);
    Ok(ThresholdReport {
        lambda_star,
        v_star,
        n_th,
        tau_th,
        top_simple,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClauseVerdict {
    pub clause: &'static str,
    pub status: ClauseStatus,
    /// Worst measured deviation for the clause's main inequality.
    pub slack: f64,
    pub detail: String,
}

impl ClauseVerdict {
    pub fn new(clause: &'static str, ok: bool, slack: f64, detail: String) -> Self {
        Self {
            clause,
            status: if ok { ClauseStatus::Pass } else { ClauseStatus::Fail },
            slack,
            detail,
        }
    }

    pub fn not_applicable(clause: &'static str, detail: &str) -> Self {
        Self {
            clause,
            status: ClauseStatus::NotApplicable,
            slack: 0.0,
            detail: detail.to_string(),
        }
    }

    pub fn ok(&self) -> bool {
        self.status != ClauseStatus::Fail
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremVerdict {
    pub saturation: ClauseVerdict,
    pub tightness: ClauseVerdict,
    pub uniqueness: ClauseVerdict,
}

impl TheoremVerdict {
    pub fn all_pass(&self) -> bool {
        self.clauses().iter().all(|c| c.ok())
    }

    pub fn clauses(&self) -> [&ClauseVerdict; 3] {
        [&self.saturation, &self.tightness, &self.uniqueness]
    }
}

/// `τ ≥ τ_th`, forgiving rounding in the last few bits of `τ_th`.
pub fn at_or_above_threshold<T: Real>(tau: T, tau_th: T) -> bool {
    tau >= tau_th * (T::one() - T::lit(1e-12))
}

/// Checks the three theorem clauses against an exact curve and an SDP sweep
/// computed on the same instance.
pub fn verify_theorem<T: Real>(
    report: &ThresholdReport<T>,
    exact_curve: &ParetoCurve<T>,
    sdp_sweep: &[SdpSolution<T>],
) -> TheoremVerdict {
    let lambda = report.lambda_star.as_f64();
    let scale = lambda.abs().max(1.0);

    let saturated: Vec<_> = exact_curve
        .rows
        .iter()
        .filter(|r| r.n_budget >= report.n_th)
        .collect();
    let saturation = if saturated.is_empty() {
        ClauseVerdict::not_applicable("(i) sparse saturation", "no exact row with N ≥ N_th")
    } else {
        let dev = saturated
            .iter()
            .map(|r| (r.value.as_f64() - lambda).abs())
            .fold(0.0, f64::max);
        let excess = exact_curve
            .rows
            .iter()
            .map(|r| r.value.as_f64() - lambda)
            .fold(f64::NEG_INFINITY, f64::max);
        let ok = dev <= SATURATION_TOL * scale && excess <= SATURATION_TOL * scale;
        ClauseVerdict::new(
            "(i) sparse saturation",
            ok,
            dev,
            format!(
                "max |U_OPT(N) - λ*| over N ≥ {} is {dev:.3e}; max U_OPT(N) - λ* is {excess:.3e}",
                report.n_th
            ),
        )
    };

    let tightness = if sdp_sweep.is_empty() {
        ClauseVerdict::not_applicable("(ii) SDP tightness", "empty SDP sweep")
    } else {
        let unconverged: Vec<f64> = sdp_sweep
            .iter()
            .filter(|s| !s.converged)
            .map(|s| s.tau.as_f64())
            .collect();
        let excess = sdp_sweep
            .iter()
            .map(|s| s.objective.as_f64() - lambda)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut worst_eq: f64 = 0.0;
        let mut worst_rank: f64 = 0.0;
        let mut above = 0;
        for s in sdp_sweep
            .iter()
            .filter(|s| at_or_above_threshold(s.tau, report.tau_th))
        {
            above += 1;
            worst_eq = worst_eq.max((s.objective.as_f64() - lambda).abs());
            // A degenerate top eigenspace admits higher-rank optimizers.
            if report.top_simple {
                worst_rank = worst_rank.max(s.rank_gap.as_f64());
            }
        }
        let ok = unconverged.is_empty()
            && excess <= SDP_BOUND_TOL
            && worst_eq <= SDP_BOUND_TOL
            && worst_rank <= RANK_GAP_TOL;
        ClauseVerdict::new(
            "(ii) SDP tightness",
            ok,
            worst_eq.max(excess.max(0.0)),
            format!(
                "max U_SDP - λ* = {excess:.3e}; over {above} points with τ ≥ τ_th: max |U_SDP - λ*| = {worst_eq:.3e}, max rank gap = {worst_rank:.3e}; unconverged τ: {unconverged:?}"
            ),
        )
    };

    let above: Vec<_> = sdp_sweep
        .iter()
        .filter(|s| at_or_above_threshold(s.tau, report.tau_th))
        .collect();
    let uniqueness = if !report.top_simple {
        ClauseVerdict::not_applicable("(iii) uniqueness", "top eigenvalue on p⊥ is not simple")
    } else if above.is_empty() {
        ClauseVerdict::not_applicable("(iii) uniqueness", "no grid point with τ ≥ τ_th")
    } else {
        let target = Matrix::outer(&report.v_star, &report.v_star);
        let dist = above
            .iter()
            .map(|s| s.x.sub(&target).frobenius_norm().as_f64())
            .fold(0.0, f64::max);
        ClauseVerdict::new(
            "(iii) uniqueness",
            dist <= UNIQUENESS_TOL && above.iter().all(|s| s.converged),
            dist,
            format!("max ‖X - v*v*ᵀ‖_F over τ ≥ τ_th is {dist:.3e}"),
        )
    };

    TheoremVerdict {
        saturation,
        tightness,
        uniqueness,
    }
}
