//! Exact `ℓ0`-constrained Rayleigh quotient on `√P_X^⊥` by support
//! enumeration, and the exact Pareto curve `U_OPT(N)`.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limits;
use crate::linalg::{self, Matrix};
use crate::scalar::Real;
use crate::spectral::{eig_sym, fix_sign, orthobasis_complement};

/// Largest number of supports [`solve_exact`] will enumerate.
pub const MAX_SUPPORTS: u128 = 10_000_000;

const CHUNK: usize = 4096;

/// A feasible sparse leakage direction and its Rayleigh value `lᵀ A l`.
#[derive(Clone, Debug, Serialize)]
pub struct SparseSolution<T = f64> {
    pub l: Vec<T>,
    pub support: Vec<usize>,
    pub value: T,
    pub n_budget: usize,
}

/// `U_OPT(N)` for `N = 1..=n_max`, unscaled.
///
/// Utilities in nats are `½ε²` times these values; see [`ParetoCurve::scaled`].
#[derive(Clone, Debug)]
pub struct ParetoCurve<T = f64> {
    pub rows: Vec<SparseSolution<T>>,
    pub lambda_star: T,
}

impl<T: Real> ParetoCurve<T> {
    pub fn value_at(&self, n: usize) -> Option<T> {
        self.rows.iter().find(|r| r.n_budget == n).map(|r| r.value)
    }

    pub fn budgets(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n_budget).collect()
    }

    /// `(N, ½ε² U_OPT(N))`
    pub fn scaled(&self, epsilon: T) -> Vec<(usize, T)> {
        let s = T::lit(0.5) * epsilon * epsilon;
        self.rows.iter().map(|r| (r.n_budget, s * r.value)).collect()
    }
}

/// `C(n, k)` without overflow for the sizes handled here.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Maximizes `lᵀ A l` over unit `l ⊥ p` supported on `s`.
///
/// Singletons are infeasible and return the zero vector with value zero.
pub fn restricted_rayleigh<T: Real>(a: &Matrix<T>, p: &[T], s: &[usize]) -> Result<(T, Vec<T>)> {
    let k = p.len();
    if s.is_empty() {
        return Err(Error::InvalidBudget { n: 0, k });
    }
    if let Some(&bad) = s.iter().find(|&&i| i >= k) {
        return Err(Error::Dimension {
            expected: k,
            got: bad + 1,
        });
    }
    if s.len() == 1 {
        return Ok((T::zero(), vec![T::zero(); k]));
    }
    let p_sub: Vec<T> = s.iter().map(|&i| p[i]).collect();
    let basis = orthobasis_complement(&p_sub)?;
    let reduced = basis.transpose().matmul(&a.principal_submatrix(s)).matmul(&basis);
    let (_, y) = eig_sym(&reduced)?.top();
    let local = basis.matvec(&y);
    let mut l = vec![T::zero(); k];
    for (&i, &v) in s.iter().zip(&local) {
        l[i] = v;
    }
    let norm = linalg::norm2(&l);
    l.iter_mut().for_each(|x| *x = *x / norm);
    fix_sign(&mut l);
    Ok((a.rayleigh(&l), l))
}

fn check_budget(k: usize, n_budget: usize) -> Result<usize> {
    if n_budget == 0 || n_budget > k {
        return Err(Error::InvalidBudget { n: n_budget, k });
    }
    Ok(n_budget.min(k))
}

/// Best direction over every support of size `min(N, K)`.
///
/// Feasible sets are nested under support inclusion, so smaller supports
/// never win. Ties within `1e-12` (relative) keep the lexicographically
/// smallest support; supports are evaluated in parallel and reduced in
/// enumeration order.
pub fn solve_exact<T: Real>(a: &Matrix<T>, p: &[T], n_budget: usize) -> Result<SparseSolution<T>> {
    let k = p.len();
    let m = check_budget(k, n_budget)?;
    let count = binomial(k, m);
    if count > MAX_SUPPORTS {
        return Err(Error::CombinatorialGuard {
            k,
            n: m,
            count,
            limit: MAX_SUPPORTS,
        });
    }
    let tie = T::lit(1e-12);
    let mut best: Option<(T, Vec<T>, Vec<usize>)> = None;
    for chunk in &(0..k).combinations(m).chunks(CHUNK) {
        let supports: Vec<Vec<usize>> = chunk.collect();
        let evaluated: Vec<Result<(T, Vec<T>)>> = supports
            .par_iter()
            .map(|s| restricted_rayleigh(a, p, s))
            .collect();
        for (s, res) in supports.into_iter().zip(evaluated) {
            let (value, l) = res?;
            let better = match &best {
                None => true,
                Some((bv, _, _)) => value > *bv + tie * bv.abs().max(T::one()),
            };
            if better {
                best = Some((value, l, s));
            }
        }
    }
    let (value, l, support) = best.ok_or_else(|| Error::Internal("no supports enumerated".into()))?;
    Ok(SparseSolution {
        l,
        support,
        value,
        n_budget,
    })
}

/// Exact curve for `N = 1..=n_max`.
///
/// A decrease beyond `1e-10` (relative) between consecutive budgets is an
/// internal error.
pub fn pareto_exact<T: Real>(a: &Matrix<T>, p: &[T], n_max: usize) -> Result<ParetoCurve<T>> {
    let k = p.len();
    check_budget(k, n_max)?;
    // Guard the whole curve before spending time on the cheap budgets.
    for n in 1..=n_max {
        let count = binomial(k, n);
        if count > MAX_SUPPORTS {
            return Err(Error::CombinatorialGuard {
                k,
                n,
                count,
                limit: MAX_SUPPORTS,
            });
        }
    }
    let (lambda_star, _, _) = limits::top_direction(a, p)?;
    let rows = (1..=n_max)
        .map(|n| solve_exact(a, p, n))
        .collect::<Result<Vec<_>>>()?;
    let tol = T::lit(1e-10) * lambda_star.abs().max(T::one());
    for w in rows.windows(2) {
        if w[1].value < w[0].value - tol {
            return Err(Error::Internal(format!(
                "exact curve decreased from {} at N={} to {} at N={}",
                w[0].value, w[0].n_budget, w[1].value, w[1].n_budget
            )));
        }
    }
    Ok(ParetoCurve { rows, lambda_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(14, 7), 3432);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(40, 20), 137_846_528_820);
    }

    #[test]
    fn identity_pair_is_forced() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = Matrix::<f64>::identity(2);
        let (v, l) = restricted_rayleigh(&a, &[h, h], &[0, 1]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!((l[0] - h).abs() < 1e-15 && (l[1] + h).abs() < 1e-15);
    }

    #[test]
    fn singleton_support_is_zero() {
        let a = Matrix::from_diag(&[1.0, 4.0, 9.0]);
        let p = [0.6, 0.0, 0.8];
        let (v, l) = restricted_rayleigh(&a, &p, &[2]).unwrap();
        assert_eq!(v, 0.0);
        assert!(l.iter().all(|&x| x == 0.0));
        assert_eq!(solve_exact(&a, &p, 1).unwrap().value, 0.0);
    }

    #[test]
    fn guard_refuses_huge_enumerations() {
        let k = 40;
        let a = Matrix::<f64>::identity(k);
        let p = vec![1.0 / (k as f64).sqrt(); k];
        match solve_exact(&a, &p, 20) {
            Err(Error::CombinatorialGuard { count, .. }) => assert!(count > MAX_SUPPORTS),
            other => panic!("expected guard, got {other:?}"),
        }
        assert!(matches!(solve_exact(&a, &p, 0), Err(Error::InvalidBudget { .. })));
        assert!(matches!(solve_exact(&a, &p, 41), Err(Error::InvalidBudget { .. })));
    }
}
