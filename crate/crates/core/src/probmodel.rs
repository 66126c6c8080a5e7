//! Joint distributions of `(X, Y)`, the column-stochastic leakage matrix
//! `P_{X|Y}`, and the leakage operator `W = [√P_Y]⁻¹ P_{X|Y}⁻¹ [√P_X]`
//! together with its Gram matrix `A = WᵀW`.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Lu, Matrix};
use crate::scalar::{l0_count, Real};
use crate::spectral::{eig_sym, SymmetricEigen};

/// Tolerance on `Σ p_xy = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Tolerance on each column sum of `P_{X|Y}`.
pub const COLUMN_TOLERANCE: f64 = 1e-10;
/// Minimum reciprocal condition number of `P_{X|Y}` accepted at load.
pub const MIN_RCOND: f64 = 1e-8;
/// Stricter conditioning required of generated instances.
pub const GENERATOR_MIN_RCOND: f64 = 1e-6;
/// Rejection rounds before [`random_instance`] gives up.
pub const GENERATOR_MAX_ROUNDS: usize = 1000;

/// On-disk instance format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct InstanceFile {
    pub k: usize,
    pub p_xy: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Validated joint distribution of `(X, Y)` on a common alphabet of size `k`.
#[derive(Clone, Debug)]
pub struct JointDistribution<T = f64> {
    k: usize,
    p_xy: Matrix<T>,
    p_x: Vec<T>,
    p_y: Vec<T>,
    p_x_given_y: Matrix<T>,
    rcond: T,
    pub seed: Option<u64>,
    pub label: Option<String>,
}

impl<T: Real> JointDistribution<T> {
    /// Validates `p_xy` (rows indexed by `x`, columns by `y`).
    pub fn new(p_xy: Matrix<T>) -> Result<Self> {
        Self::with_threshold(p_xy, T::lit(MIN_RCOND))
    }

    fn with_threshold(p_xy: Matrix<T>, min_rcond: T) -> Result<Self> {
        let k = p_xy.rows();
        if !p_xy.is_square() {
            return Err(Error::Shape {
                k,
                detail: format!("{} rows by {} columns", p_xy.rows(), p_xy.cols()),
            });
        }
        if k < 2 {
            return Err(Error::AlphabetTooSmall { k });
        }
        for i in 0..k {
            for j in 0..k {
                let v = p_xy[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if v < T::zero() {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v.as_f64(),
                    });
                }
            }
        }
        let total: T = p_xy.as_slice().iter().copied().sum();
        let sum_tol = T::lit(SUM_TOLERANCE).max(T::epsilon() * T::lit(8.0 * (k * k) as f64));
        if (total - T::one()).abs() > sum_tol {
            return Err(Error::NotNormalized {
                sum: total.as_f64(),
                tolerance: sum_tol.as_f64(),
            });
        }
        let p_x: Vec<T> = (0..k).map(|i| p_xy.row(i).iter().copied().sum()).collect();
        let p_y: Vec<T> = (0..k).map(|j| p_xy.column(j).into_iter().sum()).collect();
        for (axis, marg) in [("P_X", &p_x), ("P_Y", &p_y)] {
            if let Some((index, v)) = marg.iter().enumerate().find(|(_, v)| **v <= T::zero()) {
                return Err(Error::ZeroMarginal {
                    axis,
                    index,
                    value: v.as_f64(),
                });
            }
        }
        let p_x_given_y = Matrix::from_fn(k, k, |x, y| p_xy[(x, y)] / p_y[y]);
        let col_tol = T::lit(COLUMN_TOLERANCE).max(T::epsilon() * T::lit(8.0 * k as f64));
        for y in 0..k {
            let s: T = p_x_given_y.column(y).into_iter().sum();
            if (s - T::one()).abs() > col_tol {
                return Err(Error::Internal(format!("column {y} of P_X|Y sums to {s}")));
            }
        }
        let rcond = linalg::reciprocal_condition(&p_x_given_y);
        if !(rcond >= min_rcond) {
            return Err(Error::SingularLeakage {
                rcond: rcond.as_f64(),
                threshold: min_rcond.as_f64(),
            });
        }
        Ok(Self {
            k,
            p_xy,
            p_x,
            p_y,
            p_x_given_y,
            rcond,
            seed: None,
            label: None,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn from_instance(file: &InstanceFile) -> Result<Self> {
        if file.p_xy.len() != file.k {
            return Err(Error::Shape {
                k: file.k,
                detail: format!("{} rows listed", file.p_xy.len()),
            });
        }
        let rows: Vec<Vec<T>> = file
            .p_xy
            .iter()
            .map(|r| r.iter().map(|&v| T::from_f64(v).unwrap_or_else(T::nan)).collect())
            .collect();
        let m = Matrix::from_rows(&rows).map_err(|_| Error::Shape {
            k: file.k,
            detail: "ragged rows".into(),
        })?;
        if m.cols() != file.k {
            return Err(Error::Shape {
                k: file.k,
                detail: format!("{} columns listed", m.cols()),
            });
        }
        let mut dist = Self::new(m)?;
        dist.seed = file.seed;
        dist.label = file.label.clone();
        Ok(dist)
    }

    pub fn to_instance(&self) -> InstanceFile {
        InstanceFile {
            k: self.k,
            p_xy: self
                .p_xy
                .to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(Real::as_f64).collect())
                .collect(),
            seed: self.seed,
            label: self.label.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p_xy(&self) -> &Matrix<T> {
        &self.p_xy
    }

    pub fn p_x(&self) -> &[T] {
        &self.p_x
    }

    pub fn p_y(&self) -> &[T] {
        &self.p_y
    }

    /// Column-stochastic `P_{X|Y}`, entry `(x, y)`.
    pub fn p_x_given_y(&self) -> &Matrix<T> {
        &self.p_x_given_y
    }

    /// Reciprocal 1-norm condition number of `P_{X|Y}`.
    pub fn rcond(&self) -> T {
        self.rcond
    }

    /// `√P_X`, a unit vector.
    pub fn sqrt_p_x(&self) -> Vec<T> {
        self.p_x.iter().map(|v| v.sqrt()).collect()
    }
}

/// Parses and validates a JSON instance.
pub fn load_joint<T: Real, R: Read>(source: R) -> Result<JointDistribution<T>> {
    let file: InstanceFile =
        serde_json::from_reader(source).map_err(|e| Error::Parse(e.to_string()))?;
    JointDistribution::from_instance(&file)
}

/// Deterministic random full-support instance.
///
/// Entries are i.i.d. uniform weights normalized to sum one. Draws that fail
/// the marginal floor `1e-3 / k` or the conditioning bound move on to a fresh
/// ChaCha stream.
pub fn random_instance<T: Real>(k: usize, seed: u64) -> Result<JointDistribution<T>> {
    if k < 2 {
        return Err(Error::AlphabetTooSmall { k });
    }
    let floor = 1e-3 / k as f64;
    for round in 0..GENERATOR_MAX_ROUNDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round as u64);
        let raw: Vec<f64> = (0..k * k).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let m = Matrix::from_fn(k, k, |i, j| T::lit(raw[i * k + j] / total));
        let Ok(mut dist) = JointDistribution::with_threshold(m, T::lit(GENERATOR_MIN_RCOND)) else {
            continue;
        };
        let floor_t = T::lit(floor);
        if dist.p_x.iter().chain(&dist.p_y).any(|&v| v < floor_t) {
            continue;
        }
        dist.seed = Some(seed);
        return Ok(dist);
    }
    Err(Error::RejectionExhausted {
        k,
        rounds: GENERATOR_MAX_ROUNDS,
    })
}

/// `W`, `A = WᵀW` and the eigendecomposition of `A`.
#[derive(Clone, Debug)]
pub struct LeakageOperator<T = f64> {
    pub w: Matrix<T>,
    pub a: Matrix<T>,
    /// Eigenvalues of `A`, ascending (squared singular values of `W`).
    pub sigma_sq: Vec<T>,
    /// Orthonormal eigenvectors of `A` as columns.
    pub v: Matrix<T>,
    /// `√P_X`
    pub p: Vec<T>,
}

impl<T: Real> LeakageOperator<T> {
    pub fn eigen(&self) -> SymmetricEigen<T> {
        SymmetricEigen {
            values: self.sigma_sq.clone(),
            vectors: self.v.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    /// `‖W l‖₂²`
    pub fn energy(&self, l: &[T]) -> T {
        let wl = self.w.matvec(l);
        linalg::dot(&wl, &wl)
    }
}

/// Builds `W` by its defining product and decomposes `A = WᵀW`.
pub fn build_operator<T: Real>(dist: &JointDistribution<T>) -> Result<LeakageOperator<T>> {
    let k = dist.k();
    let m = dist.p_x_given_y();
    let inv = Lu::factor(m)?.refined_inverse(m, 2);
    let sqrt_px = dist.sqrt_p_x();
    let sqrt_py: Vec<T> = dist.p_y().iter().map(|v| v.sqrt()).collect();
    let w = Matrix::from_fn(k, k, |i, j| inv[(i, j)] * sqrt_px[j] / sqrt_py[i]);
    let a = w.gram();
    let eig = eig_sym(&a)?;
    Ok(LeakageOperator {
        w,
        a,
        sigma_sq: eig.values,
        v: eig.vectors,
        p: sqrt_px,
    })
}

/// Outcome of checking one conditional `P_{X|U=u}` against the sparse
/// point-wise constraints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintReport {
    /// `‖P_{X|U=u} − P_X‖₀`
    pub l0: usize,
    /// `χ²(P_{X|U=u}; P_X)`
    pub chi2: f64,
    pub l0_ok: bool,
    pub chi2_ok: bool,
}

impl ConstraintReport {
    pub fn passes(&self) -> bool {
        self.l0_ok && self.chi2_ok
    }
}

/// Relative slack granted to `χ² ≤ ε²` so that boundary cases survive rounding.
pub const CHI2_SLACK: f64 = 1e-9;

/// Checks `‖cond − P_X‖₀ ≤ N` and `χ²(cond; P_X) ≤ ε²`.
///
/// `cond` must itself be a probability vector (nonnegative, summing to one
/// within `1e-10`).
pub fn verify_pointwise_constraints<T: Real>(
    dist: &JointDistribution<T>,
    cond: &[T],
    n_budget: usize,
    eps: T,
) -> Result<ConstraintReport> {
    let k = dist.k();
    if cond.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: cond.len(),
        });
    }
    let tol = T::lit(COLUMN_TOLERANCE);
    if let Some((i, v)) = cond.iter().enumerate().find(|(_, v)| **v < -tol || !v.is_finite()) {
        return Err(Error::NotProbability(format!("entry {i} = {v}")));
    }
    let s: T = cond.iter().copied().sum();
    if (s - T::one()).abs() > tol {
        return Err(Error::NotProbability(format!("entries sum to {s}")));
    }
    let diff = linalg::sub(cond, dist.p_x());
    let l0 = l0_count(&diff);
    let chi2: T = diff
        .iter()
        .zip(dist.p_x())
        .map(|(&d, &px)| d * d / px)
        .sum();
    let bound = eps * eps;
    Ok(ConstraintReport {
        l0,
        chi2: chi2.as_f64(),
        l0_ok: l0 <= n_budget,
        chi2_ok: chi2 <= bound * (T::one() + T::lit(CHI2_SLACK)) + T::lit(1e-15),
    })
}
