//! Dense symmetric eigendecomposition and the Euclidean projections used by
//! the exact solver and the SDP splitting scheme.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{Real, NUMERIC_ZERO};

/// Relative off-diagonal Frobenius tolerance for Jacobi sweeps.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Sweep cap for cyclic Jacobi.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition `M = Q Λ Qᵀ` of a symmetric matrix.
///
/// Eigenvalues ascend. Every eigenvector has its first entry of magnitude
/// above `1e-10` positive, and eigenvalues equal within `1e-12` (relative)
/// are ordered by decreasing lexicographic order of their eigenvectors, so
/// the identity decomposes onto the standard basis in order.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: Matrix<T>,
}

impl<T: Real> SymmetricEigen<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<T> {
        self.vectors.column(i)
    }

    /// Largest eigenvalue and its eigenvector.
    pub fn top(&self) -> (T, Vec<T>) {
        let n = self.dim();
        (self.values[n - 1], self.vector(n - 1))
    }

    /// `Q Λ Qᵀ`
    pub fn reconstruct(&self) -> Matrix<T> {
        assemble(&self.vectors, &self.values)
    }
}

/// `Σ_i w_i q_i q_iᵀ` over the columns `q_i` of `q`, skipping zero weights.
fn assemble<T: Real>(q: &Matrix<T>, weights: &[T]) -> Matrix<T> {
    let n = q.rows();
    let mut out = Matrix::zeros(n, n);
    for (k, &w) in weights.iter().enumerate() {
        if w == T::zero() {
            continue;
        }
        for i in 0..n {
            let wi = w * q[(i, k)];
            if wi == T::zero() {
                continue;
            }
            for j in 0..n {
                out[(i, j)] = out[(i, j)] + wi * q[(j, k)];
            }
        }
    }
    out
}

fn off_diagonal_norm<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Flips `v` so that its first entry of magnitude above `1e-10` is positive.
pub fn fix_sign<T: Real>(v: &mut [T]) {
    let zero = T::lit(NUMERIC_ZERO);
    if let Some(first) = v.iter().find(|x| x.abs() > zero) {
        if *first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized first. Fails only if the off-diagonal mass does
/// not drop below tolerance within [`JACOBI_MAX_SWEEPS`] sweeps.
pub fn eig_sym<T: Real>(m: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let n = m.rows();
    let mut a = m.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();
    let tol = T::lit(JACOBI_TOLERANCE).max(T::epsilon() * T::lit(4.0)) * scale;

    let mut converged = scale == T::zero() || n < 2;
    let mut sweeps = 0;
    while !converged {
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (apq + apq);
                let t = if theta.abs() > T::lit(1e150) {
                    T::one() / (theta + theta)
                } else {
                    let t = T::one() / (theta.abs() + T::one().hypot(theta));
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / T::one().hypot(t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            off: off_diagonal_norm(&a).as_f64(),
        });
    }

    let mut pairs: Vec<(T, Vec<T>)> = (0..n)
        .map(|i| {
            let mut col = v.column(i);
            fix_sign(&mut col);
            (a[(i, i)], col)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));

    // Reorder clusters of numerically equal eigenvalues lexicographically.
    let tie = T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * scale.max(T::one());
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|x, y| lex_cmp(&y.1, &x.1));
        }
        start = end;
    }

    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (j, (val, col)) in pairs.into_iter().enumerate() {
        values.push(val);
        vectors.set_column(j, &col);
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σ x ≤ 1}`.
pub fn project_capped_simplex<T: Real>(v: &[T]) -> Vec<T> {
    let clipped: Vec<T> = v.iter().map(|&x| x.max(T::zero())).collect();
    if clipped.iter().copied().sum::<T>() <= T::one() {
        return clipped;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumsum = cumsum + u;
        let candidate = (cumsum - T::one()) / T::from_usize(j + 1).unwrap();
        if u - candidate > T::zero() {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(T::zero())).collect()
}

/// Frobenius projection onto the spectahedron `{X ⪰ 0, tr X ≤ 1}`.
pub fn project_spectahedron<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = eig_sym(m)?;
    let lambda = project_capped_simplex(&eig.values);
    Ok(assemble(&eig.vectors, &lambda).symmetrize())
}

/// Euclidean projection of a vector onto `{‖x‖₁ ≤ τ}`.
pub fn project_l1_ball_vec<T: Real>(v: &[T], tau: T) -> Vec<T> {
    if linalg::norm1(v) <= tau {
        return v.to_vec();
    }
    let mut mags: Vec<T> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &u) in mags.iter().enumerate() {
        cumsum = cumsum + u;
        let candidate = (cumsum - tau) / T::from_usize(j + 1).unwrap();
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| {
            let shrunk = (x.abs() - theta).max(T::zero());
            if x < T::zero() {
                -shrunk
            } else {
                shrunk
            }
        })
        .collect()
}

/// Projection onto the entrywise `ℓ1` ball `{‖M‖_{1,entry} ≤ τ}`.
pub fn project_l1_ball<T: Real>(m: &Matrix<T>, tau: T) -> Matrix<T> {
    let flat = project_l1_ball_vec(m.as_slice(), tau);
    Matrix::from_fn(m.rows(), m.cols(), |i, j| flat[i * m.cols() + j])
}

/// `Π M Π` with `Π = I − p pᵀ / ‖p‖²`.
pub fn project_nullspace<T: Real>(m: &Matrix<T>, p: &[T]) -> Matrix<T> {
    let n = m.rows();
    let pp = linalg::dot(p, p);
    let mp = m.matvec(p);
    let pm = m.tr_matvec(p);
    let c = linalg::dot(p, &mp) / (pp * pp);
    let out = Matrix::from_fn(n, n, |i, j| {
        m[(i, j)] - mp[i] * p[j] / pp - p[i] * pm[j] / pp + c * p[i] * p[j]
    });
    out.symmetrize()
}

/// Orthonormal basis (as columns) of the complement of `p_sub`.
///
/// A Householder reflector sends `p_sub / ‖p_sub‖` to a multiple of `e₁`;
/// its remaining columns span the complement. Each column carries the
/// crate sign convention.
pub fn orthobasis_complement<T: Real>(p_sub: &[T]) -> Result<Matrix<T>> {
    let n = p_sub.len();
    if n < 2 {
        return Err(Error::NoComplement { n });
    }
    let norm = linalg::norm2(p_sub);
    if norm == T::zero() {
        return Err(Error::ZeroVector);
    }
    let mut u: Vec<T> = p_sub.iter().map(|&x| x / norm).collect();
    let s = if u[0] < T::zero() { -T::one() } else { T::one() };
    u[0] = u[0] + s;
    let uu = linalg::dot(&u, &u);
    let two = T::lit(2.0);
    let mut basis = Matrix::zeros(n, n - 1);
    for j in 1..n {
        let mut col: Vec<T> = (0..n)
            .map(|i| {
                let delta = if i == j { T::one() } else { T::zero() };
                delta - two * u[i] * u[j] / uu
            })
            .collect();
        fix_sign(&mut col);
        basis.set_column(j - 1, &col);
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        m.symmetrize()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eig_sym(&Matrix::<f64>::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert!(e.vectors.sub(&Matrix::identity(3)).max_abs() < 1e-15);
    }

    #[test]
    fn diagonal_sorted_ascending() {
        let e = eig_sym(&Matrix::from_diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0]);
        assert_eq!(e.vector(1), vec![1.0, 0.0]);
    }

    #[test]
    fn random_reconstruction_and_orthogonality() {
        for seed in 0..5 {
            let m = random_symmetric(6, seed);
            let e = eig_sym(&m).unwrap();
            let resid = e.reconstruct().sub(&m).frobenius_norm();
            assert!(resid <= 1e-10 * m.frobenius_norm().max(1.0), "residual {resid}");
            let qtq = e.vectors.transpose().matmul(&e.vectors);
            assert!(qtq.sub(&Matrix::identity(6)).frobenius_norm() <= 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            for i in 0..6 {
                let v = e.vector(i);
                let first = v.iter().find(|x| x.abs() > 1e-10).unwrap();
                assert!(*first > 0.0);
            }
        }
    }

    #[test]
    fn single_precision_converges() {
        let m64 = random_symmetric(5, 11);
        let m = Matrix::<f32>::from_fn(5, 5, |i, j| m64[(i, j)] as f32);
        let e = eig_sym(&m).unwrap();
        assert!(e.reconstruct().sub(&m).frobenius_norm() <= 1e-5);
    }

    #[test]
    fn spectahedron_shrinks_large_diagonal() {
        let x = project_spectahedron(&Matrix::from_diag(&[2.0, 0.0])).unwrap();
        assert!(x.sub(&Matrix::from_diag(&[1.0, 0.0])).max_abs() < 1e-15);
    }

    #[test]
    fn spectahedron_fixes_members() {
        let v = [0.6, 0.8, 0.0];
        let m = Matrix::outer(&v, &v).scale(0.7);
        let x = project_spectahedron(&m).unwrap();
        assert!(x.sub(&m).max_abs() <= 1e-12);
    }

    #[test]
    fn l1_scalar_shrink() {
        let m = Matrix::from_rows(&[vec![2.0]]).unwrap();
        assert_eq!(project_l1_ball(&m, 1.0)[(0, 0)], 1.0);
        let small = Matrix::from_rows(&[vec![0.1, -0.2], vec![0.3, 0.0]]).unwrap();
        assert_eq!(project_l1_ball(&small, 1.0), small);
    }

    #[test]
    fn nullspace_examples() {
        let m = random_symmetric(3, 5);
        let r = project_nullspace(&m, &[1.0, 0.0, 0.0]);
        for i in 0..3 {
            assert!(r[(0, i)].abs() < 1e-15 && r[(i, 0)].abs() < 1e-15);
        }
        for i in 1..3 {
            for j in 1..3 {
                assert!((r[(i, j)] - m[(i, j)]).abs() < 1e-15);
            }
        }
        let p = [0.6, 0.0, 0.8];
        let z = project_nullspace(&Matrix::outer(&p, &p), &p);
        assert!(z.max_abs() < 1e-15);
    }

    #[test]
    fn complement_examples() {
        let b = orthobasis_complement(&[1.0f64, 0.0]).unwrap();
        assert_eq!((b.rows(), b.cols()), (2, 1));
        assert!((b[(0, 0)]).abs() < 1e-15 && (b[(1, 0)] - 1.0).abs() < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b = orthobasis_complement(&[h, h]).unwrap();
        assert!((b[(0, 0)] - h).abs() < 1e-15 && (b[(1, 0)] + h).abs() < 1e-15);

        assert!(matches!(
            orthobasis_complement(&[1.0]),
            Err(Error::NoComplement { n: 1 })
        ));
        assert!(matches!(orthobasis_complement(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }
}
