//! Binary uniform disclosure channel built from a leakage direction, with
//! exact mutual information and the point-wise leakage report.
//!
//! With `P_U = (½, ½)` and perturbations `±ε [√P_X] l`, the conditionals are
//! `P_{X|u} = P_X ± ε [√P_X] l` and, through the Markov chain `X − Y − U`,
//! `P_{Y|u} = P_{X|Y}⁻¹ P_{X|u}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Lu};
use crate::probmodel::{verify_pointwise_constraints, ConstraintReport, JointDistribution, LeakageOperator};
use crate::scalar::Real;

/// Fraction of [`max_epsilon`] a mechanism may use.
pub const SAFETY_FACTOR: f64 = 0.9;
/// Upper cap on the default experiment `ε`.
pub const DEFAULT_EPSILON_CAP: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct Mechanism<T = f64> {
    pub p_u: [T; 2],
    pub p_x_given_u: [Vec<T>; 2],
    pub p_y_given_u: [Vec<T>; 2],
    /// `2 × K`, entry `[u][y] = P_{U|Y}(u|y)`.
    pub p_u_given_y: [Vec<T>; 2],
    pub epsilon: T,
    pub direction: Vec<T>,
}

/// JSON form of a mechanism.
#[derive(Clone, Debug, Serialize)]
pub struct MechanismFile {
    pub p_u: Vec<f64>,
    pub p_u_given_y: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub direction: Vec<f64>,
}

impl<T: Real> Mechanism<T> {
    pub fn to_file(&self) -> MechanismFile {
        let f = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        MechanismFile {
            p_u: f(&self.p_u),
            p_u_given_y: self.p_u_given_y.iter().map(|r| f(r)).collect(),
            epsilon: self.epsilon.as_f64(),
            direction: f(&self.direction),
        }
    }
}

/// `[√P_X] l`
fn perturbation<T: Real>(l: &[T], dist: &JointDistribution<T>) -> Vec<T> {
    dist.p_x().iter().zip(l).map(|(&px, &li)| px.sqrt() * li).collect()
}

/// Largest `ε` at which `base ± ε d` stays inside `[0, 1]` entrywise.
fn interval_limit<T: Real>(base: &[T], d: &[T]) -> T {
    base.iter().zip(d).fold(T::infinity(), |acc, (&b, &di)| {
        let m = di.abs();
        if m == T::zero() {
            acc
        } else {
            acc.min(b / m).min((T::one() - b) / m)
        }
    })
}

/// Largest `ε` for which both `P_X ± ε[√P_X]l` and their preimages
/// `P_{X|Y}⁻¹(P_X ± ε[√P_X]l)` are entrywise in `[0, 1]`. `+∞` for `l = 0`.
pub fn max_epsilon<T: Real>(l: &[T], dist: &JointDistribution<T>) -> Result<T> {
    if l.len() != dist.k() {
        return Err(Error::Dimension {
            expected: dist.k(),
            got: l.len(),
        });
    }
    let d = perturbation(l, dist);
    let e = Lu::factor(dist.p_x_given_y())?.solve(&d);
    Ok(interval_limit(dist.p_x(), &d).min(interval_limit(dist.p_y(), &e)))
}

/// `min(0.1, ½ ε_max)`
pub fn default_epsilon<T: Real>(l: &[T], dist: &JointDistribution<T>) -> Result<T> {
    Ok(T::lit(DEFAULT_EPSILON_CAP).min(T::lit(0.5) * max_epsilon(l, dist)?))
}

/// Builds the binary uniform mechanism for direction `l` at scale `epsilon`.
///
/// Requires `0 ≤ ε ≤ 0.9 ε_max`; `ε = 0` yields the independent channel.
pub fn build_mechanism<T: Real>(
    l: &[T],
    dist: &JointDistribution<T>,
    epsilon: T,
) -> Result<Mechanism<T>> {
    let limit = T::lit(SAFETY_FACTOR) * max_epsilon(l, dist)?;
    if !(epsilon >= T::zero() && epsilon <= limit) {
        return Err(Error::EpsilonOutOfRange {
            epsilon: epsilon.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let d = perturbation(l, dist);
    let half = T::lit(0.5);
    let lu = Lu::factor(dist.p_x_given_y())?;
    let signs = [T::one(), -T::one()];
    let p_x_given_u = signs.map(|s| {
        dist.p_x()
            .iter()
            .zip(&d)
            .map(|(&px, &di)| px + s * epsilon * di)
            .collect::<Vec<T>>()
    });
    let mut p_y_given_u: [Vec<T>; 2] = [Vec::new(), Vec::new()];
    for (u, cond) in p_x_given_u.iter().enumerate() {
        let mut sol = lu.solve(cond);
        for (index, v) in sol.iter_mut().enumerate() {
            if *v < T::zero() {
                if *v < -T::lit(1e-12) {
                    return Err(Error::NegativeProbability {
                        index,
                        value: v.as_f64(),
                    });
                }
                *v = T::zero();
            }
        }
        p_y_given_u[u] = sol;
    }
    let p_u_given_y = [0, 1].map(|u| {
        p_y_given_u[u]
            .iter()
            .zip(dist.p_y())
            .map(|(&pyu, &py)| half * pyu / py)
            .collect::<Vec<T>>()
    });
    Ok(Mechanism {
        p_u: [half, half],
        p_x_given_u,
        p_y_given_u,
        p_u_given_y,
        epsilon,
        direction: l.to_vec(),
    })
}

/// `I(U; Y)` in nats.
pub fn utility_exact<T: Real>(mech: &Mechanism<T>, dist: &JointDistribution<T>) -> T {
    mech.p_u
        .iter()
        .zip(&mech.p_y_given_u)
        .map(|(&pu, cond)| {
            let kl: T = cond
                .iter()
                .zip(dist.p_y())
                .filter(|(&c, _)| c > T::zero())
                .map(|(&c, &py)| c * (c / py).ln())
                .sum();
            pu * kl
        })
        .sum()
}

/// `½ ε² ‖W l‖²`
pub fn approx_utility<T: Real>(l: &[T], w_op: &LeakageOperator<T>, epsilon: T) -> T {
    T::lit(0.5) * epsilon * epsilon * w_op.energy(l)
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputLeakage {
    pub u: usize,
    #[serde(flatten)]
    pub constraints: ConstraintReport,
    /// `|χ² − ε²‖l‖²|`
    pub identity_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LeakageReport {
    pub n_budget: usize,
    pub epsilon: f64,
    pub outputs: Vec<OutputLeakage>,
    /// `max_x |½ P_{X|u₁}(x) + ½ P_{X|u₂}(x) − P_X(x)|`
    pub mixture_residual: f64,
}

impl LeakageReport {
    pub fn passes(&self) -> bool {
        self.outputs.iter().all(|o| o.constraints.passes())
    }
}

/// Point-wise leakage of each output against `(N, ε²)`.
pub fn leakage_report<T: Real>(
    mech: &Mechanism<T>,
    dist: &JointDistribution<T>,
    n_budget: usize,
) -> Result<LeakageReport> {
    let eps = mech.epsilon;
    let expected = eps * eps * linalg::dot(&mech.direction, &mech.direction);
    let outputs = mech
        .p_x_given_u
        .iter()
        .enumerate()
        .map(|(u, cond)| {
            let constraints = verify_pointwise_constraints(dist, cond, n_budget, eps)?;
            let identity_residual = (constraints.chi2 - expected.as_f64()).abs();
            Ok(OutputLeakage {
                u,
                constraints,
                identity_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let half = T::lit(0.5);
    let mixture_residual = (0..dist.k())
        .map(|x| {
            (half * mech.p_x_given_u[0][x] + half * mech.p_x_given_u[1][x] - dist.p_x()[x])
                .abs()
                .as_f64()
        })
        .fold(0.0, f64::max);
    Ok(LeakageReport {
        n_budget,
        epsilon: eps.as_f64(),
        outputs,
        mixture_residual,
    })
}
