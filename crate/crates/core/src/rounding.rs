//! Rounding of lifted SDP solutions to feasible sparse leakage directions,
//! the best-over-`τ` envelope, and the Pareto gap against the exact curve.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{restricted_rayleigh, solve_exact, ParetoCurve};
use crate::linalg::{self, Matrix};
use crate::scalar::{Real, NUMERIC_ZERO};
use crate::sdp::{sweep_tau, SdpSolution, SolverOptions};
use crate::spectral::{eig_sym, fix_sign};

/// Gap at or below which the rounded envelope counts as matching the exact
/// curve.
pub const GAP_ZERO: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct RoundedSolution<T = f64> {
    pub l_hat: Vec<T>,
    /// `l_hatᵀ A l_hat`
    pub value: T,
    /// Grid point the direction was rounded from; `None` for the exact
    /// two-sparse fallback used when every rounding collapses.
    pub source_tau: Option<T>,
    pub n_budget: usize,
    /// Surviving support after hard thresholding, ascending.
    pub support: Vec<usize>,
}

/// Indices of the `n` largest magnitudes, ties going to the lower index.
fn top_magnitudes<T: Real>(v: &[T], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| {
        v[j].abs()
            .partial_cmp(&v[i].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    idx.truncate(n);
    idx.sort_unstable();
    idx
}

/// Top eigenvector, projection onto `p^⊥`, hard threshold to the `n_budget`
/// largest magnitudes, re-projection on the surviving support, normalization.
pub fn round_solution<T: Real>(
    a: &Matrix<T>,
    x: &Matrix<T>,
    p: &[T],
    n_budget: usize,
) -> Result<RoundedSolution<T>> {
    let k = p.len();
    if n_budget < 2 {
        return Err(Error::BudgetTooSmall { n: n_budget });
    }
    if n_budget > k {
        return Err(Error::InvalidBudget { n: n_budget, k });
    }
    let (top, v) = eig_sym(x)?.top();
    if !(top > T::lit(1e-12)) {
        return Err(Error::RoundingCollapsed);
    }
    let v = linalg::reject_from(&v, p);
    let support = top_magnitudes(&v, n_budget);

    let v_s: Vec<T> = support.iter().map(|&i| v[i]).collect();
    let p_s: Vec<T> = support.iter().map(|&i| p[i]).collect();
    let v_s = linalg::reject_from(&v_s, &p_s);
    let norm = linalg::norm2(&v_s);
    if !(norm >= T::lit(1e-12)) {
        return Err(Error::RoundingCollapsed);
    }
    let mut l_hat = vec![T::zero(); k];
    for (&i, &val) in support.iter().zip(&v_s) {
        l_hat[i] = val / norm;
    }
    fix_sign(&mut l_hat);
    Ok(RoundedSolution {
        value: a.quad_form(&l_hat),
        l_hat,
        source_tau: None,
        n_budget,
        support,
    })
}

/// Replaces the rounded direction by the best direction on its own support.
/// Never decreases the value and keeps feasibility.
pub fn polish<T: Real>(a: &Matrix<T>, p: &[T], r: &RoundedSolution<T>) -> Result<RoundedSolution<T>> {
    let (value, l) = restricted_rayleigh(a, p, &r.support)?;
    if value >= r.value {
        Ok(RoundedSolution {
            l_hat: l,
            value,
            ..r.clone()
        })
    } else {
        Ok(r.clone())
    }
}

/// Best rounded direction over a completed sweep.
///
/// Only converged points are rounded. Ties keep the smaller `τ`. When every
/// rounding collapses, falls back to the exact best two-sparse direction.
pub fn envelope_from_sweep<T: Real>(
    a: &Matrix<T>,
    p: &[T],
    n_budget: usize,
    sweep: &[SdpSolution<T>],
    polish_result: bool,
) -> Result<RoundedSolution<T>> {
    if n_budget < 2 {
        return Err(Error::BudgetTooSmall { n: n_budget });
    }
    let mut any_converged = false;
    let mut best: Option<RoundedSolution<T>> = None;
    for sol in sweep.iter().filter(|s| s.converged) {
        any_converged = true;
        let mut r = match round_solution(a, &sol.x, p, n_budget) {
            Ok(r) => r,
            Err(Error::RoundingCollapsed) => continue,
            Err(e) => return Err(e),
        };
        if polish_result {
            r = polish(a, p, &r)?;
        }
        r.source_tau = Some(sol.tau);
        if best.as_ref().map_or(true, |b| r.value > b.value) {
            best = Some(r);
        }
    }
    if !any_converged {
        return Err(Error::NoConvergedPoints);
    }
    match best {
        Some(b) => Ok(b),
        None => {
            let pair = solve_exact(a, p, 2)?;
            Ok(RoundedSolution {
                l_hat: pair.l,
                value: pair.value,
                source_tau: None,
                n_budget,
                support: pair.support,
            })
        }
    }
}

/// Sweeps `τ` over `grid` and returns the best rounded direction.
pub fn sdp_envelope<T: Real>(
    a: &Matrix<T>,
    p: &[T],
    n_budget: usize,
    grid: &[T],
    opts: &SolverOptions,
    polish_result: bool,
) -> Result<RoundedSolution<T>> {
    if n_budget < 2 {
        return Err(Error::BudgetTooSmall { n: n_budget });
    }
    let sweep: Vec<SdpSolution<T>> = sweep_tau(a, p, grid, opts)?
        .into_iter()
        .filter_map(Result::ok)
        .collect();
    envelope_from_sweep(a, p, n_budget, &sweep, polish_result)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub n: usize,
    pub u_opt: f64,
    pub u_sdp: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Smallest `N` from which every later gap is at most [`GAP_ZERO`].
    pub n_th_emp: Option<usize>,
}

/// `Δ(N) = U_OPT(N) − Û_SDP(N)` per budget.
///
/// `envelopes` must list the same budgets as the curve, in order. `None`
/// marks a budget with no rounded direction (in particular `N = 1`), whose
/// envelope value is zero.
pub fn pareto_gap<T: Real>(
    curve: &ParetoCurve<T>,
    envelopes: &[(usize, Option<RoundedSolution<T>>)],
) -> Result<GapReport> {
    let budgets = curve.budgets();
    let env_budgets: Vec<usize> = envelopes.iter().map(|(n, _)| *n).collect();
    if budgets != env_budgets {
        return Err(Error::RangeMismatch(format!(
            "exact curve has {budgets:?}, envelopes have {env_budgets:?}"
        )));
    }
    let rows: Vec<GapRow> = curve
        .rows
        .iter()
        .zip(envelopes)
        .map(|(row, (n, env))| {
            let u_opt = row.value.as_f64();
            let u_sdp = env.as_ref().map_or(0.0, |e| e.value.as_f64());
            GapRow {
                n: *n,
                u_opt,
                u_sdp,
                gap: u_opt - u_sdp,
            }
        })
        .collect();
    Ok(GapReport {
        n_th_emp: empirical_threshold(&rows),
        rows,
    })
}

fn empirical_threshold(rows: &[GapRow]) -> Option<usize> {
    let mut threshold = None;
    for row in rows.iter().rev() {
        if row.gap <= GAP_ZERO {
            threshold = Some(row.n);
        } else {
            break;
        }
    }
    threshold
}

/// Feasibility of a direction for the sparse Rayleigh problem: unit norm and
/// orthogonality within `1e-10`, and at most `n_budget` nonzeros.
pub fn is_feasible<T: Real>(l: &[T], p: &[T], n_budget: usize) -> bool {
    let tol = T::lit(NUMERIC_ZERO);
    (linalg::norm2(l) - T::one()).abs() <= tol
        && linalg::dot(l, p).abs() <= tol
        && crate::scalar::l0_count(l) <= n_budget
}
