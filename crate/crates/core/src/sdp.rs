//! Convex relaxation of the sparse Rayleigh quotient:
//!
//! ```text
//! maximize ⟨A, X⟩  s.t.  X ⪰ 0,  tr X ≤ 1,  X p = 0,  ‖X‖_{1,entry} ≤ τ
//! ```
//!
//! solved by consensus ADMM between the block `{X ⪰ 0, tr X ≤ 1, X p = 0}`
//! (nullspace projection followed by the spectahedron projection, which is
//! exact because the latter preserves the eigenvector `p`) and the entrywise
//! `ℓ1` ball. The objective enters as a linear drift on the first block.
//!
//! Convergence is certified by the ADMM residuals together with a duality
//! gap: for any symmetric multiplier `Y`,
//! `U_SDP(τ) ≤ λ_max(Π (A − Y) Π) + τ max_ij |Y_ij|`.

use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limits::{top_direction, SDP_BOUND_TOL};
use crate::linalg::{self, Matrix};
use crate::scalar::Real;
use crate::spectral::{eig_sym, project_l1_ball, project_nullspace, project_spectahedron};

/// How the `τ` values of a sweep are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum TauGrid {
    /// 25 linearly spaced points on `[1, K]`.
    Default,
    Linear { lo: f64, hi: f64, count: usize },
    Explicit(Vec<f64>),
}

impl TauGrid {
    pub const DEFAULT_COUNT: usize = 25;

    pub fn values(&self, k: usize) -> Vec<f64> {
        match self {
            TauGrid::Default => linspace(1.0, k as f64, Self::DEFAULT_COUNT),
            TauGrid::Linear { lo, hi, count } => linspace(*lo, *hi, *count),
            TauGrid::Explicit(v) => v.clone(),
        }
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| {
                if i == count - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

impl FromStr for TauGrid {
    type Err = Error;

    /// Accepts `default`, `lin:LO:HI:COUNT`, or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidOptions(format!("unrecognized tau grid {s:?}"));
        let s = s.trim();
        if s == "default" {
            return Ok(TauGrid::Default);
        }
        if let Some(rest) = s.strip_prefix("lin:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].parse().map_err(|_| bad())?;
            let count: usize = parts[2].parse().map_err(|_| bad())?;
            if count == 0 || !(lo > 0.0) || !(hi >= lo) {
                return Err(bad());
            }
            return Ok(TauGrid::Linear { lo, hi, count });
        }
        let values = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Ok(TauGrid::Explicit(values))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Bound on the primal and dual ADMM residuals and on the relative
    /// duality gap.
    pub tolerance: f64,
    /// Initial penalty parameter.
    pub rho: f64,
    pub adaptive_rho: bool,
    /// Iterations between residual-balancing updates of the penalty.
    pub rho_interval: usize,
    pub rho_factor: f64,
    /// Over-relaxation weight in `(0, 2)`; 1 is plain ADMM.
    pub relaxation: f64,
    /// Start each sweep point from the previous point's iterates. When off,
    /// grid points are solved concurrently.
    pub warm_start: bool,
    pub tau_grid: TauGrid,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-7,
            rho: 1.0,
            adaptive_rho: true,
            rho_interval: 50,
            rho_factor: 2.0,
            relaxation: 1.6,
            warm_start: true,
            tau_grid: TauGrid::Default,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tolerance, self.rho, self.rho_factor];
        if self.max_iterations == 0
            || self.rho_interval == 0
            || positive.iter().any(|v| !(*v > 0.0 && v.is_finite()))
            || !(self.relaxation > 0.0 && self.relaxation < 2.0)
        {
            return Err(Error::InvalidOptions(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Scaled ADMM iterates, kept for warm starts.
#[derive(Clone, Debug)]
pub struct AdmmState<T> {
    z: Matrix<T>,
    u: Matrix<T>,
    rho: T,
}

#[derive(Clone, Debug)]
pub struct SdpSolution<T = f64> {
    /// Feasible PSD matrix: the spectahedron-side iterate, shrunk onto the
    /// `ℓ1` ball when it overshoots.
    pub x: Matrix<T>,
    /// `⟨A, X⟩`
    pub objective: T,
    pub tau: T,
    pub iterations: usize,
    /// Largest violation among PSD, trace, nullspace and (relative) `ℓ1`
    /// constraints of `x`.
    pub primal_residual: T,
    /// Final ADMM consensus residual `‖X − Z‖_F`.
    pub consensus_residual: T,
    pub dual_residual: T,
    /// Certified upper bound minus `objective`, in objective units.
    pub duality_gap: T,
    /// `μ₂ / μ₁` for the two largest eigenvalues of `x` (zero for `x = 0`).
    pub rank_gap: T,
    pub converged: bool,
    state: AdmmState<T>,
}

struct Certificate<T> {
    x: Matrix<T>,
    gap: T,
}

/// Feasible point and duality gap for the normalized problem.
fn certify<T: Real>(
    a_hat: &Matrix<T>,
    p: &[T],
    tau: T,
    x: &Matrix<T>,
    y: &Matrix<T>,
) -> Result<Certificate<T>> {
    let l1 = x.entry_l1_norm();
    let feasible = if l1 > tau { x.scale(tau / l1) } else { x.clone() };
    let objective = a_hat.inner(&feasible);
    let (top, _) = eig_sym(&project_nullspace(&a_hat.sub(y), p))?.top();
    let bound = top.max(T::zero()) + tau * y.max_abs();
    Ok(Certificate {
        x: feasible,
        gap: bound - objective,
    })
}

fn diagnostics<T: Real>(x: &Matrix<T>, p: &[T], tau: T) -> Result<(T, T)> {
    let eig = eig_sym(x)?;
    let n = eig.dim();
    let top = eig.values[n - 1];
    let rank_gap = if top > T::zero() {
        if n > 1 {
            eig.values[n - 2].max(T::zero()) / top
        } else {
            T::zero()
        }
    } else {
        T::zero()
    };
    let psd = (-eig.values[0]).max(T::zero());
    let trace = (x.trace() - T::one()).max(T::zero());
    let null = linalg::max_abs(&x.matvec(p));
    let l1 = ((x.entry_l1_norm() - tau) / tau).max(T::zero());
    Ok((psd.max(trace).max(null).max(l1), rank_gap))
}

/// Solves the relaxation at one `τ`.
///
/// Hitting `max_iterations` is not an error: the best iterate seen is
/// returned with `converged = false`.
pub fn solve_sdp<T: Real>(
    a: &Matrix<T>,
    p: &[T],
    tau: T,
    opts: &SolverOptions,
) -> Result<SdpSolution<T>> {
    solve_sdp_warm(a, p, tau, opts, None)
}

/// [`solve_sdp`] seeded with the iterates of an earlier solution.
pub fn solve_sdp_warm<T: Real>(
    a: &Matrix<T>,
    p: &[T],
    tau: T,
    opts: &SolverOptions,
    warm: Option<&SdpSolution<T>>,
) -> Result<SdpSolution<T>> {
    if !(tau > T::zero() && tau.is_finite()) {
        return Err(Error::InvalidTau(tau.as_f64()));
    }
    opts.validate()?;
    let k = p.len();
    if a.rows() != k || a.cols() != k {
        return Err(Error::Dimension {
            expected: k,
            got: a.rows(),
        });
    }

    // Normalize the objective so that the optimum is at most one; the
    // penalty then has a problem-independent scale.
    let (lambda_star, _, _) = top_direction(a, p)?;
    let scale = if lambda_star > T::zero() { lambda_star } else { T::one() };
    let a_hat = a.scale(T::one() / scale);
    let tol = T::lit(opts.tolerance);
    let gap_tol = tol * lambda_star.max(T::one()) / scale;

    let (mut z, mut u, mut rho) = match warm {
        Some(w) => (w.state.z.clone(), w.state.u.clone(), w.state.rho),
        None => (Matrix::zeros(k, k), Matrix::zeros(k, k), T::lit(opts.rho)),
    };
    let factor = T::lit(opts.rho_factor);
    let alpha = T::lit(opts.relaxation);
    let balance = T::lit(10.0);

    let mut best: Option<(T, Matrix<T>, usize, T, T)> = None;
    let mut finished: Option<(Certificate<T>, usize, T, T)> = None;
    let mut x = z.clone();
    for iter in 1..=opts.max_iterations {
        let drift = z.sub(&u).add(&a_hat.scale(T::one() / rho));
        x = project_spectahedron(&project_nullspace(&drift, p))?;
        let z_prev = z;
        let x_rel = x.scale(alpha).add(&z_prev.scale(T::one() - alpha));
        z = project_l1_ball(&x_rel.add(&u), tau);
        u = u.add(&x_rel.sub(&z));
        let r = x.sub(&z).frobenius_norm();
        let s = rho * z.sub(&z_prev).frobenius_norm();

        let combined = r.max(s);
        if best.as_ref().map_or(true, |b| combined < b.0) {
            best = Some((combined, x.clone(), iter, r, s));
        }

        if r <= tol && s <= tol {
            let cert = certify(&a_hat, p, tau, &x, &u.scale(rho))?;
            if cert.gap <= gap_tol {
                finished = Some((cert, iter, r, s));
                break;
            }
        }

        if opts.adaptive_rho && iter % opts.rho_interval == 0 {
            if r > balance * s {
                rho = rho * factor;
                u = u.scale(T::one() / factor);
            } else if s > balance * r {
                rho = rho / factor;
                u = u.scale(factor);
            }
        }
    }

    let converged = finished.is_some();
    let (cert, iterations, r, s) = match finished {
        Some(f) => f,
        None => {
            let (_, bx, _, br, bs) = best.unwrap_or((T::zero(), x, 0, T::zero(), T::zero()));
            let cert = certify(&a_hat, p, tau, &bx, &u.scale(rho))?;
            (cert, opts.max_iterations, br, bs)
        }
    };
    let (primal_residual, rank_gap) = diagnostics(&cert.x, p, tau)?;
    Ok(SdpSolution {
        objective: a.inner(&cert.x),
        x: cert.x,
        tau,
        iterations,
        primal_residual,
        consensus_residual: r,
        dual_residual: s,
        duality_gap: cert.gap * scale,
        rank_gap,
        converged,
        state: AdmmState { z, u, rho },
    })
}

/// One solve per grid point; a failed point does not stop the sweep.
pub fn sweep_tau<T: Real>(
    a: &Matrix<T>,
    p: &[T],
    grid: &[T],
    opts: &SolverOptions,
) -> Result<Vec<Result<SdpSolution<T>>>> {
    if grid.is_empty()
        || grid.iter().any(|t| !(*t > T::zero()))
        || grid.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidGrid);
    }
    opts.validate()?;
    if !opts.warm_start {
        return Ok(grid.par_iter().map(|&tau| solve_sdp(a, p, tau, opts)).collect());
    }
    let mut out: Vec<Result<SdpSolution<T>>> = Vec::with_capacity(grid.len());
    for &tau in grid {
        let warm = out.iter().rev().find_map(|r| r.as_ref().ok());
        let sol = solve_sdp_warm(a, p, tau, opts, warm);
        out.push(sol);
    }
    Ok(out)
}

/// `true` iff the solution's objective respects the spectral ceiling
/// `λ* + 1e-6`.
pub fn dual_bound_check<T: Real>(sol: &SdpSolution<T>, lambda_star: T) -> bool {
    sol.objective <= lambda_star + T::lit(SDP_BOUND_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!("default".parse::<TauGrid>().unwrap(), TauGrid::Default);
        assert_eq!(
            "lin:1:4:4".parse::<TauGrid>().unwrap().values(9),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(
            "1.5, 2".parse::<TauGrid>().unwrap(),
            TauGrid::Explicit(vec![1.5, 2.0])
        );
        assert!("lin:1:4".parse::<TauGrid>().is_err());
        assert!("lin:0:4:3".parse::<TauGrid>().is_err());
        let d = TauGrid::Default.values(6);
        assert_eq!(d.len(), 25);
        assert_eq!((d[0], d[24]), (1.0, 6.0));
    }

    #[test]
    fn rejects_bad_tau_and_options() {
        let a = Matrix::<f64>::identity(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let opts = SolverOptions::default();
        assert!(matches!(solve_sdp(&a, &[h, h], 0.0, &opts), Err(Error::InvalidTau(_))));
        assert!(matches!(solve_sdp(&a, &[h, h], -1.0, &opts), Err(Error::InvalidTau(_))));
        let bad = SolverOptions {
            tolerance: 0.0,
            ..SolverOptions::default()
        };
        assert!(solve_sdp(&a, &[h, h], 1.0, &bad).is_err());
        assert!(matches!(sweep_tau(&a, &[h, h], &[2.0, 1.0], &opts), Err(Error::InvalidGrid)));
        assert!(matches!(sweep_tau::<f64>(&a, &[h, h], &[], &opts), Err(Error::InvalidGrid)));
    }
}
