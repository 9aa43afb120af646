//! Gauss–Legendre rules, fixed and adaptive (vector-valued integrands).

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::certified::{CertifiedValue, Method};
use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn cached(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static R8: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R10: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static R20: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    match n {
        8 => R8.get_or_init(|| gauss_legendre_rule(8)),
        10 => R10.get_or_init(|| gauss_legendre_rule(10)),
        20 => R20.get_or_init(|| gauss_legendre_rule(20)),
        _ => unreachable!("uncached rule"),
    }
}

/// Fixed `n`-point rule on `[a, b]`.
pub fn gauss_legendre(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let owned;
    let (x, w) = if matches!(n, 8 | 10 | 20) {
        cached(n)
    } else {
        owned = gauss_legendre_rule(n);
        &owned
    };
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + r * xi)).sum::<f64>() * r
}

fn rule_vec(f: &dyn Fn(f64) -> Vec<f64>, a: f64, b: f64, n: usize, dim: usize) -> Vec<f64> {
    let (x, w) = cached(n);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = vec![0.0; dim];
    for (xi, wi) in x.iter().zip(w) {
        for (s, v) in acc.iter_mut().zip(f(c + r * xi)) {
            *s += wi * r * v;
        }
    }
    acc
}

const MAX_DEPTH: u32 = 40;

/// Adaptive 10/20-point Gauss–Legendre for a vector-valued integrand on `[a, b]`.
///
/// Returns the integrals and the accumulated error estimate (max-norm over components).
/// `breaks` are interior points where the integrand is only piecewise smooth.
pub fn adaptive_vec(
    f: &dyn Fn(f64) -> Vec<f64>,
    a: f64,
    b: f64,
    breaks: &[f64],
    dim: usize,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let total = b - a;
    let mut acc = vec![0.0; dim];
    let mut err = 0.0;
    let mut stack: Vec<(f64, f64, u32)> = pts.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
    while let Some((x0, x1, depth)) = stack.pop() {
        let coarse = rule_vec(f, x0, x1, 10, dim);
        let fine = rule_vec(f, x0, x1, 20, dim);
        let e = coarse
            .iter()
            .zip(&fine)
            .map(|(c, d)| (c - d).abs())
            .fold(0.0, f64::max);
        let local_tol = tol * (x1 - x0) / total;
        if e <= local_tol.max(1e-15 * fine.iter().map(|v| v.abs()).fold(0.0, f64::max)) || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && e > local_tol {
                return Err(Error::ToleranceNotMet {
                    best: CertifiedValue::new(0.0, e, Method::Quadrature),
                    requested: tol,
                });
            }
            for (s, v) in acc.iter_mut().zip(&fine) {
                *s += v;
            }
            err += e;
            continue;
        }
        let m = 0.5 * (x0 + x1);
        stack.push((m, x1, depth + 1));
        stack.push((x0, m, depth + 1));
    }
    Ok((acc, err))
}

/// Scalar adaptive Gauss–Legendre; returns an enclosure from the error estimate.
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<CertifiedValue> {
    let (v, e) = adaptive_vec(&|x| vec![f(x)], a, b, breaks, 1, tol)?;
    Ok(CertifiedValue::new(v[0] - e, v[0] + e, Method::Quadrature))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [3, 8, 10, 20] {
            let v = gauss_legendre(&|x| x.powi(2 * n as i32 - 1) + x.powi(2 * n as i32 - 2), 0.0, 1.0, n);
            let exact = 1.0 / (2 * n) as f64 + 1.0 / (2 * n - 1) as f64;
            assert!((v - exact).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_kinks() {
        let v = adaptive(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[], 1e-12).unwrap();
        assert!(v.contains(0.29) || (v.mid() - 0.29).abs() < 1e-12);
        let w = adaptive(&|x: f64| (10.0 * x).sin(), 0.0, 2.0, &[], 1e-13).unwrap();
        assert!((w.mid() - (1.0 - 20f64.cos()) / 10.0).abs() < 1e-13);
    }
}
