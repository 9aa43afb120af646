use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real trigonometric polynomial `a0 + Σ_{j≥1} (a_j cos 2πjt + b_j sin 2πjt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrigPoly {
    pub constant: f64,
    /// `cos[j-1]` is the coefficient of `cos(2πjt)`.
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

/// Coefficients below this fraction of the largest one count as zero for `degree()`.
pub const ZERO_THRESHOLD: f64 = 1e-14;

impl TrigPoly {
    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let mut p = TrigPoly { constant, cos, sin };
        p.pad();
        p
    }

    pub fn constant(c: f64) -> Self {
        TrigPoly {
            constant: c,
            ..Default::default()
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `cos(2πnt)`.
    pub fn cosine(n: usize) -> Self {
        if n == 0 {
            return Self::constant(1.0);
        }
        let mut cos = vec![0.0; n];
        cos[n - 1] = 1.0;
        TrigPoly::new(0.0, cos, vec![])
    }

    pub fn sine(n: usize) -> Self {
        let mut sin = vec![0.0; n];
        sin[n - 1] = 1.0;
        TrigPoly::new(0.0, vec![], sin)
    }

    fn pad(&mut self) {
        let m = self.cos.len().max(self.sin.len());
        self.cos.resize(m, 0.0);
        self.sin.resize(m, 0.0);
    }

    /// Number of stored harmonics (not thresholded).
    pub fn len(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn a(&self, j: usize) -> f64 {
        if j == 0 {
            self.constant
        } else {
            self.cos.get(j - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn b(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.sin.get(j - 1).copied().unwrap_or(0.0)
        }
    }

    /// Complex coefficient `α_j`, with `α_{-j} = conj(α_j)`.
    pub fn alpha(&self, j: i64) -> Complex64 {
        let m = j.unsigned_abs() as usize;
        if m == 0 {
            return Complex64::new(self.constant, 0.0);
        }
        let z = Complex64::new(self.a(m) / 2.0, -self.b(m) / 2.0);
        if j > 0 {
            z
        } else {
            z.conj()
        }
    }

    /// Largest `|j|` with `|α_j|` above the zero threshold relative to the largest coefficient.
    pub fn degree(&self) -> usize {
        let mx = (0..=self.len())
            .map(|j| self.alpha(j as i64).norm())
            .fold(0.0, f64::max);
        if mx == 0.0 {
            return 0;
        }
        (1..=self.len())
            .rev()
            .find(|&j| self.alpha(j as i64).norm() > ZERO_THRESHOLD * mx)
            .unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.rem_euclid(1.0);
        let (s1, c1) = (2.0 * PI * t).sin_cos();
        let mut acc = self.constant;
        let (mut c, mut s) = (1.0, 0.0);
        for j in 0..self.len() {
            let nc = c * c1 - s * s1;
            let ns = s * c1 + c * s1;
            c = nc;
            s = ns;
            // re-anchor periodically to bound drift of the rotation recurrence
            if j % 16 == 15 {
                let (ss, cc) = (2.0 * PI * ((j + 1) as f64 * t).rem_euclid(1.0)).sin_cos();
                c = cc;
                s = ss;
            }
            acc += self.cos[j] * c + self.sin[j] * s;
        }
        acc
    }

    /// Apply an even real multiplier `m(j)` to every harmonic (`m(0)` scales the constant).
    pub fn map_multiplier(&self, m: impl Fn(usize) -> f64) -> TrigPoly {
        TrigPoly {
            constant: self.constant * m(0),
            cos: self.cos.iter().enumerate().map(|(i, a)| a * m(i + 1)).collect(),
            sin: self.sin.iter().enumerate().map(|(i, b)| b * m(i + 1)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> TrigPoly {
        self.map_multiplier(|_| s)
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let m = self.len().max(other.len());
        TrigPoly {
            constant: self.constant + other.constant,
            cos: (1..=m).map(|j| self.a(j) + other.a(j)).collect(),
            sin: (1..=m).map(|j| self.b(j) + other.b(j)).collect(),
        }
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.scale(-1.0))
    }

    /// `t ↦ p(t + s)`.
    pub fn shift(&self, s: f64) -> TrigPoly {
        let mut cos = Vec::with_capacity(self.len());
        let mut sin = Vec::with_capacity(self.len());
        for j in 1..=self.len() {
            let (sn, cs) = (2.0 * PI * (j as f64 * s).rem_euclid(1.0)).sin_cos();
            let (a, b) = (self.a(j), self.b(j));
            // a cos(x + φ) + b sin(x + φ)
            cos.push(a * cs + b * sn);
            sin.push(b * cs - a * sn);
        }
        TrigPoly {
            constant: self.constant,
            cos,
            sin,
        }
    }

    pub fn derivative(&self, order: u32) -> TrigPoly {
        let mut p = self.clone();
        for _ in 0..order {
            let cos = (1..=p.len()).map(|j| 2.0 * PI * j as f64 * p.b(j)).collect();
            let sin = (1..=p.len()).map(|j| -2.0 * PI * j as f64 * p.a(j)).collect();
            p = TrigPoly {
                constant: 0.0,
                cos,
                sin,
            };
        }
        p
    }

    /// `t ↦ p(t+u) − 2p(t) + p(t−u)`, multiplier `−4 sin²(πju)`.
    pub fn second_difference(&self, u: f64) -> TrigPoly {
        self.map_multiplier(|j| {
            let s = (PI * (j as f64 * u).rem_euclid(1.0)).sin();
            -4.0 * s * s
        })
    }

    /// `Σ_j (2πj)^r (|a_j| + |b_j|)`, a bound of `‖D^r p‖`.
    pub fn derivative_bound(&self, r: u32) -> f64 {
        let mut s = if r == 0 { self.constant.abs() } else { 0.0 };
        for j in 1..=self.len() {
            s += (2.0 * PI * j as f64).powi(r as i32) * (self.a(j).abs() + self.b(j).abs());
        }
        s
    }

    /// Drop trailing harmonics that are exactly zero.
    pub fn trimmed(mut self) -> TrigPoly {
        while !self.cos.is_empty()
            && self.cos[self.cos.len() - 1] == 0.0
            && self.sin[self.sin.len() - 1] == 0.0
        {
            self.cos.pop();
            self.sin.pop();
        }
        self
    }

    /// Truncate to harmonics `≤ n`.
    pub fn truncate(&self, n: usize) -> TrigPoly {
        let mut p = self.clone();
        p.cos.truncate(n);
        p.sin.truncate(n);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_cosine_at_zero() {
        assert_eq!(TrigPoly::cosine(1).eval(0.0), 1.0);
        assert!((TrigPoly::cosine(3).eval(0.25) - (1.5 * PI).cos()).abs() < 1e-15);
    }

    #[test]
    fn alpha_conjugate_symmetry() {
        let p = TrigPoly::new(0.5, vec![1.0, -2.0], vec![0.3, 0.7]);
        for j in 0..3 {
            assert_eq!(p.alpha(j), p.alpha(-j).conj());
        }
        // Σ α_j e^{2πijt} reproduces eval with zero imaginary part
        let t = 0.37;
        let z: Complex64 = (-2..=2)
            .map(|j| p.alpha(j) * Complex64::from_polar(1.0, 2.0 * PI * j as f64 * t))
            .sum();
        assert!(z.im.abs() < 1e-14);
        assert!((z.re - p.eval(t)).abs() < 1e-14);
    }

    #[test]
    fn degree_ignores_fuzz() {
        let p = TrigPoly::new(0.0, vec![1.0, 0.0, 1e-17], vec![]);
        assert_eq!(p.degree(), 1);
        assert_eq!(TrigPoly::zero().degree(), 0);
    }

    #[test]
    fn second_difference_of_cosine() {
        let p = TrigPoly::cosine(1).second_difference(0.5);
        assert!((p.a(1) + 4.0).abs() < 1e-15);
        let q = TrigPoly::cosine(1).second_difference(1.0);
        assert!(q.a(1).abs() < 1e-15);
    }

    #[test]
    fn shift_and_derivative_agree_with_direct_evaluation() {
        let p = TrigPoly::new(0.1, vec![0.4, -0.2, 0.9], vec![-0.3, 0.5, 0.05]);
        let q = p.shift(0.123);
        let d = p.derivative(2);
        for i in 0..50 {
            let t = i as f64 / 50.0;
            assert!((q.eval(t) - p.eval(t + 0.123)).abs() < 1e-13);
            let h = 1e-4;
            let fd = (p.eval(t + h) - 2.0 * p.eval(t) + p.eval(t - h)) / (h * h);
            assert!((d.eval(t) - fd).abs() < 1e-3 * d.derivative_bound(0));
        }
    }

    #[test]
    fn long_recurrence_stays_accurate() {
        let p = TrigPoly::cosine(60);
        for i in 0..100 {
            let t = i as f64 * 0.00731;
            assert!((p.eval(t) - (2.0 * PI * 60.0 * t).cos()).abs() < 1e-12);
        }
    }
}
