use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_leakage::spectral::{project_l1_ball_vec, project_spectahedron};
use sparse_leakage::{
    build_operator, eig_sym, random_instance, restricted_rayleigh, solve_exact, Matrix,
};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(a: &Matrix<f64>, v: &[f64]) -> f64 {
    let k = v.len();
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            s += v[i] * a[(i, j)] * v[j];
        }
    }
    s
}

/// Unit vector on `s`, orthogonal to `p`, from arbitrary coordinates.
fn feasible_on(s: &[usize], p: &[f64], coords: &[f64]) -> Option<Vec<f64>> {
    let mut v = vec![0.0; p.len()];
    for (&i, &c) in s.iter().zip(coords) {
        v[i] = c;
    }
    let p_s: Vec<f64> = (0..p.len()).map(|i| if s.contains(&i) { p[i] } else { 0.0 }).collect();
    let c = dot(&v, &p_s) / dot(&p_s, &p_s);
    v.iter_mut().zip(&p_s).for_each(|(x, q)| *x -= c * q);
    let n = dot(&v, &v).sqrt();
    (n > 1e-12).then(|| v.iter().map(|x| x / n).collect())
}

/// Random search followed by shifted power iteration inside the feasible set.
fn rayleigh_oracle(a: &Matrix<f64>, p: &[f64], s: &[usize], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut best_v = Vec::new();
    for _ in 0..samples {
        let coords: Vec<f64> = s.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(v) = feasible_on(s, p, &coords) {
            let q = quad(a, &v);
            if q > best {
                best = q;
                best_v = v;
            }
        }
    }
    let shift: f64 = (0..p.len()).map(|i| a[(i, i)].abs()).sum::<f64>() + 1.0;
    let mut v = best_v;
    for _ in 0..20_000 {
        let av: Vec<f64> = (0..p.len())
            .map(|i| (0..p.len()).map(|j| a[(i, j)] * v[j]).sum::<f64>() + shift * v[i])
            .collect();
        let coords: Vec<f64> = s.iter().map(|&i| av[i]).collect();
        v = feasible_on(s, p, &coords).unwrap();
    }
    best.max(quad(a, &v))
}

#[test]
fn restricted_rayleigh_matches_search_oracle() {
    let dist = random_instance::<f64>(6, 3).unwrap();
    let op = build_operator(&dist).unwrap();
    let s = [1, 3, 5];
    let (value, l) = restricted_rayleigh(&op.a, &op.p, &s).unwrap();
    let oracle = rayleigh_oracle(&op.a, &op.p, &s, 100_000, 11);
    assert!(oracle <= value + 1e-9 * value.max(1.0), "{oracle} > {value}");
    assert!((value - oracle).abs() <= 1e-6 * value.max(1.0), "{value} vs {oracle}");
    assert!(dot(&l, &op.p).abs() < 1e-12);
    assert!((dot(&l, &l) - 1.0).abs() < 1e-12);
    assert!([0, 2, 4].iter().all(|&i| l[i] == 0.0));
}

#[test]
fn pair_budget_matches_closed_form_enumeration() {
    for seed in 0..10 {
        let dist = random_instance::<f64>(5, seed).unwrap();
        let op = build_operator(&dist).unwrap();
        let p = &op.p;
        // On a pair {i, j} the feasible direction is ±(p_j e_i − p_i e_j).
        let mut best = f64::NEG_INFINITY;
        for i in 0..5 {
            for j in i + 1..5 {
                let mut v = vec![0.0; 5];
                v[i] = p[j];
                v[j] = -p[i];
                let n = dot(&v, &v).sqrt();
                v.iter_mut().for_each(|x| *x /= n);
                best = best.max(quad(&op.a, &v));
            }
        }
        let sol = solve_exact(&op.a, p, 2).unwrap();
        assert!((sol.value - best).abs() <= 1e-6, "seed {seed}: {} vs {best}", sol.value);
        assert_eq!(sol.support.len(), 2);
    }
}

#[test]
fn stationary_vector_is_fixed() {
    for k in 3..=8 {
        let dist = random_instance::<f64>(k, 40 + k as u64).unwrap();
        let op = build_operator(&dist).unwrap();
        let sq: Vec<f64> = dist.p_x().iter().map(|v| v.sqrt()).collect();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            let mut s = 0.0;
            for r in 0..k {
                for j in 0..k {
                    s += op.w[(r, i)] * op.w[(r, j)] * sq[j];
                }
            }
            worst = worst.max((s - sq[i]).abs());
        }
        assert!(worst <= 1e-10, "k={k}: {worst}");
    }
}

fn l1_oracle(v: &[f64], tau: f64) -> Vec<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= tau {
        return v.to_vec();
    }
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = v.iter().map(|x| (x.abs() - mid).max(0.0)).sum();
        if s > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

#[test]
fn l1_projection_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(1..12);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let tau = rng.gen_range(0.05..6.0);
        let got = project_l1_ball_vec(&v, tau);
        let want = l1_oracle(&v, tau);
        let err = got.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12, "{v:?} {tau}: {err}");
    }
}

#[test]
fn spectahedron_projection_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let n = rng.gen_range(2..7);
        let b = Matrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let m = b.add(&b.transpose());
        let eig = eig_sym(&m).unwrap();
        let mu = &eig.values;
        let clipped: f64 = mu.iter().map(|x| x.max(0.0)).sum();
        let shift = if clipped <= 1.0 {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, mu.iter().fold(0.0f64, |a, &x| a.max(x)));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mu.iter().map(|x| (x - mid).max(0.0)).sum::<f64>() > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let mut want = Matrix::zeros(n, n);
        for (i, &m_i) in mu.iter().enumerate() {
            let w = (m_i - shift).max(0.0);
            want = want.add(&Matrix::outer(&eig.vector(i), &eig.vector(i)).scale(w));
        }
        let got = project_spectahedron(&m).unwrap();
        assert!(got.sub(&want).max_abs() < 1e-10);
    }
}
