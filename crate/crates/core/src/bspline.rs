use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

/// Largest kernel order evaluated through the alternating-sum representation.
pub const MAX_ORDER: u32 = 20;

/// The cardinal B-spline `χ_h^k`: `k`-fold convolution power of `(1/h)·1_{(−h/2,h/2)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSplineKernel {
    pub h: f64,
    pub k: u32,
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in terms {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1u64;
    for i in 0..k as u64 {
        r = r * (n as u64 - i) / (i + 1);
    }
    r as f64
}

fn factorial(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// `sin(x)/x`, with a Taylor expansion near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Multiplier of `χ_u^k` at frequency `j`: `sinc(πju)^k`.
pub fn multiplier(u: f64, k: u32, j: usize) -> f64 {
    sinc(PI * j as f64 * u).powi(k as i32)
}

impl BSplineKernel {
    pub fn new(h: f64, k: u32) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel width h = {h} must be > 0")));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("kernel order k must be ≥ 1".into()));
        }
        if k > MAX_ORDER {
            return Err(Error::Unsupported(format!(
                "kernel order {k} exceeds {MAX_ORDER}"
            )));
        }
        Ok(BSplineKernel { h, k })
    }

    pub fn support_radius(&self) -> f64 {
        self.k as f64 * self.h / 2.0
    }

    /// Point value; `0` outside `(−kh/2, kh/2)`, open-interval convention at the box ends.
    pub fn eval(&self, t: f64) -> f64 {
        let (h, k) = (self.h, self.k);
        // evaluate on the left half, where the alternating sum has fewest terms
        let x = (k as f64 * h / 2.0 - t.abs()) / h;
        if x <= 0.0 {
            return 0.0;
        }
        let terms = (0..=k).take_while(|&j| x - j as f64 > 0.0).map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            s * binomial(k, j) * (x - j as f64).powi(k as i32 - 1)
        });
        compensated_sum(terms) / (h * factorial(k - 1))
    }

    pub fn fourier_coeff(&self, j: i64) -> f64 {
        multiplier(self.h, self.k, j.unsigned_abs() as usize)
    }

    /// `c_k(h) = 2h²/(k+2)! Σ_{j≤k/2} (−1)^j C(k,j) (k/2 − j)^{k+2} = ∫_0^{kh/2} u² χ_h^k(u) du`.
    pub fn second_moment_constant(&self) -> f64 {
        let k = self.k;
        let terms = (0..=k / 2).map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            s * binomial(k, j) * (k as f64 / 2.0 - j as f64).powi(k as i32 + 2)
        });
        2.0 * self.h * self.h * compensated_sum(terms) / factorial(k + 2)
    }

    /// Exact polynomial pieces on the real line.
    pub fn compact(&self) -> CompactKernel {
        let (h, k) = (self.h, self.k);
        let r = k as f64 * h / 2.0;
        let knots: Vec<f64> = (0..=k).map(|i| -r + i as f64 * h).collect();
        let norm = h * factorial(k - 1);
        let pieces = (0..k)
            .map(|i| {
                // Σ_{j≤i} (−1)^j C(k,j) (y/h + i − j)^{k−1}, y the local variable
                let mut c = vec![0.0; k as usize];
                for j in 0..=i {
                    let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let a = (i - j) as f64;
                    for (m, cm) in c.iter_mut().enumerate() {
                        let m = m as u32;
                        *cm += s
                            * binomial(k, j)
                            * binomial(k - 1, m)
                            * a.powi((k - 1 - m) as i32)
                            / h.powi(m as i32);
                    }
                }
                c.iter().map(|v| v / norm).collect()
            })
            .collect();
        CompactKernel { knots, pieces }
    }

    /// `E|S|` for the unit-width kernel (`h = 1`).
    pub fn unit_first_abs_moment(&self) -> f64 {
        let kern = BSplineKernel { h: 1.0, k: self.k }.compact();
        kern.moment_abs(1)
    }

    /// `∫ |d/ds (s K(s))| ds` for the unit kernel: `|∂_u (f*χ_u^k)| ≤ V₁ osc(f)/(2u)`.
    pub fn unit_u_lipschitz(&self) -> f64 {
        if self.k == 1 {
            return 2.0;
        }
        let kern = BSplineKernel { h: 1.0, k: self.k }.compact();
        // K + sK' on each piece
        kern.abs_integral_of(|p, a| {
            let s = [a, 1.0];
            let mut q = p.to_vec();
            let dp = poly::derivative(p);
            poly::add_assign(&mut q, &mul(&s, &dp), 1.0);
            q
        })
    }

    /// `∫ |2K + 4sK' + s²K''|` (as a measure) for the unit kernel:
    /// `|∂²_u (f*χ_u^k)| ≤ V₂ osc(f)/(2u²)`. Infinite for the box kernel.
    pub fn unit_u_curvature(&self) -> Option<f64> {
        if self.k == 1 {
            return None;
        }
        let kern = BSplineKernel { h: 1.0, k: self.k }.compact();
        let smooth = kern.abs_integral_of(|p, a| {
            let s = [a, 1.0];
            let s2 = mul(&s, &s);
            let dp = poly::derivative(p);
            let ddp = poly::derivative(&dp);
            let mut q: Vec<f64> = p.iter().map(|c| 2.0 * c).collect();
            poly::add_assign(&mut q, &mul(&s, &dp), 4.0);
            poly::add_assign(&mut q, &mul(&s2, &ddp), 1.0);
            q
        });
        // point masses of K'' where K' jumps (order 2 only)
        let mut atoms = 0.0;
        if self.k == 2 {
            let n = kern.pieces.len();
            for i in 0..=n {
                let left = if i == 0 {
                    0.0
                } else {
                    let p = &kern.pieces[i - 1];
                    poly::eval(&poly::derivative(p), kern.knots[i] - kern.knots[i - 1])
                };
                let right = if i == n {
                    0.0
                } else {
                    poly::eval(&poly::derivative(&kern.pieces[i]), 0.0)
                };
                atoms += kern.knots[i].powi(2) * (right - left).abs();
            }
        }
        Some(smooth + atoms)
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Compactly supported piecewise-polynomial kernel on the real line.
///
/// Piece `i` covers `[knots[i], knots[i+1]]` in the local variable `y − knots[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactKernel {
    pub knots: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

impl CompactKernel {
    pub fn eval(&self, y: f64) -> f64 {
        let n = self.pieces.len();
        if y < self.knots[0] || y >= self.knots[n] {
            return 0.0;
        }
        let i = self.knots.partition_point(|&k| k <= y) - 1;
        poly::eval(&self.pieces[i.min(n - 1)], y - self.knots[i.min(n - 1)])
    }

    pub fn mass(&self) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| poly::eval(&poly::integral(p), self.knots[i + 1] - self.knots[i]))
            .sum()
    }

    /// `∫ |y|^m K(y) dy` assuming `K ≥ 0`.
    pub fn moment_abs(&self, m: u32) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let a = self.knots[i];
                let b = self.knots[i + 1];
                // split at 0 if needed, integrate y^m K exactly in the global variable
                let g = poly::taylor_shift(p, -a);
                let mut w = vec![0.0; m as usize + 1];
                w[m as usize] = 1.0;
                let prim = poly::integral(&mul(&w, &g));
                let seg = |x0: f64, x1: f64| poly::eval(&prim, x1) - poly::eval(&prim, x0);
                if a < 0.0 && b > 0.0 {
                    (seg(a, 0.0)).abs() + seg(0.0, b).abs()
                } else {
                    seg(a, b).abs()
                }
            })
            .sum()
    }

    /// `Σ_i ∫ |q_i|` where `q_i = build(p_i, a_i)` is expressed in the local variable
    /// and `a_i` is the left knot (so `s = a_i + y`).
    fn abs_integral_of(&self, build: impl Fn(&[f64], f64) -> Vec<f64>) -> f64 {
        self.pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let q = build(p, self.knots[i]);
                poly::abs_integral(&q, self.knots[i + 1] - self.knots[i])
            })
            .sum()
    }
}
