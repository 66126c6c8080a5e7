//! Small dense linear algebra: a row-major matrix, vector helpers and an LU
//! factorization with partial pivoting. Sized for alphabets up to a few
//! hundred letters.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::Dimension {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn from_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// `u vᵀ`
    pub fn outer(u: &[T], v: &[T]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[T]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `selfᵀ self` with compensated entries; exactly symmetric.
    pub fn gram(&self) -> Self {
        let cols: Vec<Vec<T>> = (0..self.cols).map(|j| self.column(j)).collect();
        let mut out = Self::zeros(self.cols, self.cols);
        for i in 0..self.cols {
            for j in i..self.cols {
                let v = dot_compensated(&cols[i], &cols[j]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] = out.data[i * rhs.cols + j] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v`
    pub fn tr_matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len(), "tr_matvec dimension mismatch");
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * vi;
            }
        }
        out
    }

    /// `vᵀ M v` with error-free products and compensated summation.
    pub fn quad_form(&self, v: &[T]) -> T {
        let n = self.cols;
        let mut acc = Compensated::new();
        for (i, &vi) in v.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                let (h1, e1) = two_prod(vi, self.data[i * n + j]);
                let (h2, e2) = two_prod(h1, vj);
                acc.add(h2);
                acc.add(e2 + e1 * vj);
            }
        }
        acc.value()
    }

    /// `vᵀ M v / vᵀ v`, both evaluated with compensated arithmetic.
    pub fn rayleigh(&self, v: &[T]) -> T {
        self.quad_form(v) / dot_compensated(v, v)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// `(M + Mᵀ) / 2`
    pub fn symmetrize(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| half * (self[(i, j)] + self[(j, i)]))
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> T {
        self.diagonal().into_iter().sum()
    }

    /// Frobenius inner product `⟨self, other⟩ = tr(selfᵀ other)`.
    pub fn inner(&self, other: &Self) -> T {
        dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    /// Entrywise `ℓ1` norm `Σ_ij |m_ij|`.
    pub fn entry_l1_norm(&self) -> T {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.data)
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm_1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Principal submatrix on the given index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `a·b = p + e` exactly.
fn two_prod<T: Real>(a: T, b: T) -> (T, T) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Neumaier summation.
struct Compensated<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Compensated<T> {
    fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    fn value(&self) -> T {
        self.sum + self.carry
    }
}

/// Dot product accurate to about one rounding of the result.
pub fn dot_compensated<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Compensated::new();
    for (&x, &y) in a.iter().zip(b) {
        let (p, e) = two_prod(x, y);
        acc.add(p);
        acc.add(e);
    }
    acc.value()
}

pub fn norm2<T: Real>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

pub fn norm1<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| x.abs()).sum()
}

pub fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `a - b`
pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scaled<T: Real>(v: &[T], s: T) -> Vec<T> {
    v.iter().map(|&x| x * s).collect()
}

/// Removes the component of `v` along `dir` (which need not be unit).
pub fn reject_from<T: Real>(v: &[T], dir: &[T]) -> Vec<T> {
    let dd = dot(dir, dir);
    if dd == T::zero() {
        return v.to_vec();
    }
    let c = dot(v, dir) / dd;
    v.iter().zip(dir).map(|(&x, &d)| x - c * d).collect()
}

/// LU factorization `P M = L U` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn factor(m: &Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, piv_val) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_val == T::zero() {
                return Err(Error::SingularSolve { pivot: k });
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in (k + 1)..n {
                        lu[(i, j)] = lu[(i, j)] - f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.lu.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            inv.set_column(j, &self.solve(&e));
        }
        inv
    }

    /// Inverse of `m` (the factored matrix) with `steps` rounds of iterative
    /// refinement per column, residuals taken in compensated arithmetic.
    pub fn refined_inverse(&self, m: &Matrix<T>, steps: usize) -> Matrix<T> {
        let n = self.lu.rows();
        let mut inv = self.inverse();
        for j in 0..n {
            let mut x = inv.column(j);
            for _ in 0..steps {
                let r: Vec<T> = (0..n)
                    .map(|i| {
                        let delta = if i == j { T::one() } else { T::zero() };
                        let mut acc = Compensated::new();
                        acc.add(delta);
                        for (&a, &b) in m.row(i).iter().zip(&x) {
                            let (p, e) = two_prod(a, b);
                            acc.add(-p);
                            acc.add(-e);
                        }
                        acc.value()
                    })
                    .collect();
                let d = self.solve(&r);
                x.iter_mut().zip(&d).for_each(|(xi, &di)| *xi = *xi + di);
            }
            inv.set_column(j, &x);
        }
        inv
    }
}

/// Reciprocal 1-norm condition number `1 / (‖M‖₁ ‖M⁻¹‖₁)`; zero when the
/// factorization hits an exactly zero pivot.
pub fn reciprocal_condition<T: Real>(m: &Matrix<T>) -> T {
    match Lu::factor(m) {
        Ok(lu) => {
            let inv = lu.inverse();
            let prod = m.norm_1() * inv.norm_1();
            if prod.is_finite() && prod > T::zero() {
                T::one() / prod
            } else {
                T::zero()
            }
        }
        Err(_) => T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refined_inverse_of_hilbert() {
        let m = Matrix::<f64>::from_fn(6, 6, |i, j| 1.0 / (i + j + 1) as f64);
        let lu = Lu::factor(&m).unwrap();
        let resid = |inv: &Matrix<f64>| {
            let mut worst = 0.0f64;
            for i in 0..6 {
                for j in 0..6 {
                    let d = dot_compensated(m.row(i), &inv.column(j)) - if i == j { 1.0 } else { 0.0 };
                    worst = worst.max(d.abs());
                }
            }
            worst
        };
        assert!(resid(&lu.refined_inverse(&m, 2)) <= resid(&lu.inverse()));
        assert!(resid(&lu.refined_inverse(&m, 2)) < 1e-8);
    }

    #[test]
    fn gram_matches_product() {
        let w = Matrix::<f64>::from_fn(3, 4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let g = w.gram();
        let p = w.transpose().matmul(&w);
        for i in 0..4 {
            for j in 0..4 {
                assert!((g[(i, j)] - p[(i, j)]).abs() < 1e-12);
                assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
    }

    #[test]
    fn lu_solves_permuted_system() {
        let m = Matrix::<f64>::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]).unwrap();
        let lu = Lu::factor(&m).unwrap();
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        let back = m.matvec(&x);
        for (a, b) in back.iter().zip([3.0, 2.0, 4.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let inv = lu.inverse();
        let eye = m.matmul(&inv);
        assert!(eye.sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_has_zero_rcond() {
        let m = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(Lu::factor(&m).is_err());
        assert_eq!(reciprocal_condition(&m), 0.0);
        assert!((reciprocal_condition(&Matrix::<f64>::identity(4)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(&[vec![1.0f64, 2.0], vec![3.0]]).is_err());
    }
}
