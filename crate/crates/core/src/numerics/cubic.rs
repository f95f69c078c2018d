use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative size below which a leading coefficient is treated as zero.
const LEADING_FLOOR: f64 = 1e-14;

const NEWTON_ITERS: usize = 12;

/// Real roots of `c3·d³ + c2·d² + c1·d + c0`, ascending.
///
/// Coefficients are normalized by their largest magnitude first; a leading
/// coefficient that is negligible after normalization drops the degree.
/// Closed-form roots (trigonometric or Cardano) are Newton-polished against
/// the normalized polynomial.
pub fn solve_cubic_real(c3: f64, c2: f64, c1: f64, c0: f64) -> Result<Vec<f64>> {
    if ![c3, c2, c1, c0].iter().all(|c| c.is_finite()) {
        return Err(Error::DegenerateEquation("non-finite coefficient"));
    }
    if c3 == 0.0 && c2 == 0.0 && c1 == 0.0 {
        return Err(Error::DegenerateEquation("no non-constant term"));
    }
    let scale = [c3, c2, c1, c0].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let (a3, a2, a1, a0) = (c3 / scale, c2 / scale, c1 / scale, c0 / scale);

    let mut roots = if a3.abs() < LEADING_FLOOR {
        solve_quadratic(a2, a1, a0)
    } else {
        closed_form_cubic(a2 / a3, a1 / a3, a0 / a3)
    };

    let coeffs = if a3.abs() < LEADING_FLOOR {
        [0.0, a2, a1, a0]
    } else {
        [a3, a2, a1, a0]
    };
    for r in roots.iter_mut() {
        *r = polish(&coeffs, *r);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    Ok(roots)
}

fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < LEADING_FLOOR {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    // q = -(b + sign(b)·√disc)/2 avoids cancellation
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Roots of the monic cubic `d³ + a·d² + b·d + c`.
fn closed_form_cubic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let shift = a / 3.0;
    let q3 = q * q * q;
    if r * r < q3 {
        // three real roots
        let theta = (r / q3.sqrt()).clamp(-1.0, 1.0).acos();
        let m = -2.0 * q.sqrt();
        vec![
            m * (theta / 3.0).cos() - shift,
            m * ((theta + 2.0 * PI) / 3.0).cos() - shift,
            m * ((theta - 2.0 * PI) / 3.0).cos() - shift,
        ]
    } else {
        let big_a = -r.signum() * (r.abs() + (r * r - q3).sqrt()).cbrt();
        let big_b = if big_a == 0.0 { 0.0 } else { q / big_a };
        let mut roots = vec![big_a + big_b - shift];
        // repeated root when the discriminant vanishes
        if (r * r - q3).abs() <= 1e-12 * (r * r).max(q3.abs()) && big_a != 0.0 {
            roots.push(-0.5 * (big_a + big_b) - shift);
        }
        roots
    }
}

fn eval(coeffs: &[f64; 4], x: f64) -> (f64, f64) {
    let [a3, a2, a1, a0] = *coeffs;
    let p = ((a3 * x + a2) * x + a1) * x + a0;
    let dp = (3.0 * a3 * x + 2.0 * a2) * x + a1;
    (p, dp)
}

fn polish(coeffs: &[f64; 4], mut x: f64) -> f64 {
    let (mut p, mut dp) = eval(coeffs, x);
    for _ in 0..NEWTON_ITERS {
        if p == 0.0 || dp == 0.0 {
            break;
        }
        let next = x - p / dp;
        let (np, ndp) = eval(coeffs, next);
        if np.abs() >= p.abs() {
            break;
        }
        x = next;
        p = np;
        dp = ndp;
    }
    x
}
