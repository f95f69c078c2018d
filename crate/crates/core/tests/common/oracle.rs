//! Independent reference computations for tests: dense LU, naive products,
//! 1-D minimizers and a sign-change root counter. Nothing here calls into
//! the solver paths it is used to check.

#![allow(dead_code)]

use grantfree::numerics::{ComplexMatrix, HermitianMatrix, C64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn cn<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    (0..dim).map(|_| cn(rng)).collect()
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| cn(rng))
}

/// `B·Bᴴ + 0.5·I` for a random square `B`.
pub fn random_hpd<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    let b = random_matrix(rng, dim, dim);
    let mut m = naive_mul(&b, &b.conj_transpose());
    for i in 0..dim {
        m[(i, i)] += C64::new(0.5, 0.0);
    }
    HermitianMatrix::from_matrix(m).unwrap()
}

/// Random positive semidefinite `(1/m)·B·Bᴴ` with `B` of size dim×m.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, m: usize, scale: f64) -> HermitianMatrix {
    let b = random_matrix(rng, dim, m);
    let mut out = naive_mul(&b, &b.conj_transpose());
    for z in out.as_mut_slice() {
        *z *= scale / m as f64;
    }
    HermitianMatrix::from_matrix(out).unwrap()
}

pub fn naive_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.cols(), b.rows());
    ComplexMatrix::from_fn(a.rows(), b.cols(), |r, c| {
        let mut s = C64::new(0.0, 0.0);
        for k in 0..a.cols() {
            s += a[(r, k)] * b[(k, c)];
        }
        s
    })
}

/// `vᴴ·A·v` by explicit triple loop.
pub fn naive_quadratic(a: &ComplexMatrix, v: &[C64]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            s += v[i].conj() * a[(i, j)] * v[j];
        }
    }
    s
}

/// `A + c·v·vᴴ`.
pub fn add_outer(a: &ComplexMatrix, v: &[C64], c: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), a.cols(), |r, col| a[(r, col)] + v[r] * v[col].conj() * c)
}

struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
}

fn lu(a: &ComplexMatrix) -> Lu {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut lu: Vec<C64> = a.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[i * n + k].norm().total_cmp(&lu[j * n + k].norm()))
            .unwrap();
        if p != k {
            for c in 0..n {
                lu.swap(k * n + c, p * n + c);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = lu[k * n + k];
        assert!(pivot.norm() > 0.0, "singular matrix in LU oracle");
        for i in (k + 1)..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            for c in (k + 1)..n {
                let u = lu[k * n + c];
                lu[i * n + c] -= f * u;
            }
        }
    }
    Lu { n, lu, perm, sign }
}

pub fn lu_inverse(a: &ComplexMatrix) -> ComplexMatrix {
    let f = lu(a);
    let n = f.n;
    let mut inv = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        // solve A x = e_col
        let mut x: Vec<C64> = (0..n)
            .map(|i| {
                if f.perm[i] == col {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        for i in 0..n {
            for k in 0..i {
                let l = f.lu[i * n + k];
                x[i] = x[i] - l * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = f.lu[i * n + k];
                x[i] = x[i] - u * x[k];
            }
            x[i] /= f.lu[i * n + i];
        }
        for i in 0..n {
            inv[(i, col)] = x[i];
        }
    }
    inv
}

/// `log|det A|` via LU.
pub fn lu_log_det(a: &ComplexMatrix) -> f64 {
    let f = lu(a);
    let _ = f.sign;
    (0..f.n).map(|i| f.lu[i * f.n + i].norm().ln()).sum()
}

/// Dense f_ML: `log|Σ| + Re tr(Σ⁻¹·S)`.
pub fn dense_f_ml(sigma: &ComplexMatrix, sample_cov: &ComplexMatrix) -> f64 {
    let inv = lu_inverse(sigma);
    let prod = naive_mul(&inv, sample_cov);
    let tr: f64 = (0..sigma.rows()).map(|i| prod[(i, i)].re).sum();
    lu_log_det(sigma) + tr
}

/// Σ = P·diag(a∘γ)·Pᴴ + diag(x) + δ²·I, rebuilt entry by entry.
pub fn dense_sigma(pilots: &ComplexMatrix, gamma: &[f64], a: &[f64], x: &[f64], noise_var: f64) -> ComplexMatrix {
    let l = pilots.rows();
    ComplexMatrix::from_fn(l, l, |r, c| {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..pilots.cols() {
            s += pilots[(r, i)] * pilots[(c, i)].conj() * (a[i] * gamma[i]);
        }
        if r == c {
            s += C64::new(x[r] + noise_var, 0.0);
        }
        s
    })
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    // endpoints may win when the minimum sits on the boundary
    [lo, mid, hi]
        .into_iter()
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap()
}

/// Grid scan over `[lo, hi]` followed by golden-section polish around the
/// best grid point.
pub fn grid_then_polish(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    let step = (hi - lo) / (points - 1) as f64;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..points {
        let v = f(lo + step * k as f64);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let a = lo + step * best.saturating_sub(1) as f64;
    let b = (lo + step * (best + 1) as f64).min(hi);
    golden_section(f, a, b, 1e-12 * (1.0 + hi.abs().max(lo.abs())))
}

/// Counts sign changes of a cubic over a dense asinh-spaced grid on
/// `[lo, hi]`, with the polynomial's critical points added to the grid.
pub fn count_sign_changes(c: &[f64; 4], lo: f64, hi: f64) -> usize {
    let p = |x: f64| ((c[0] * x + c[1]) * x + c[2]) * x + c[3];
    let n = 200_000;
    let (u0, u1) = (lo.asinh(), hi.asinh());
    let mut xs: Vec<f64> = (0..=n).map(|k| (u0 + (u1 - u0) * k as f64 / n as f64).sinh()).collect();
    // critical points of p: 3c0 x² + 2c1 x + c2 = 0
    let (a, b, cc) = (3.0 * c[0], 2.0 * c[1], c[2]);
    let disc = b * b - 4.0 * a * cc;
    if a != 0.0 && disc >= 0.0 {
        xs.push((-b + disc.sqrt()) / (2.0 * a));
        xs.push((-b - disc.sqrt()) / (2.0 * a));
    }
    xs.retain(|x| *x >= lo && *x <= hi);
    xs.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut prev = p(xs[0]);
    for &x in &xs[1..] {
        let v = p(x);
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}
