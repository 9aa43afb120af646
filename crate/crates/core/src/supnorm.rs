//! Certified maxima of smooth-by-pieces functions by branch and bound on cells.
//!
//! A cell `[a, b]` of a `C²` piece with `|g''| ≤ M` satisfies
//! `max g ≤ max(g(a), g(b)) + M (b − a)² / 8`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::certified::{CertifiedValue, Method};
use crate::error::{Error, Result};
use crate::piecewise::{PiecewisePoly, Side};
use crate::poly;
use crate::trig::TrigPoly;

const NODE_BUDGET: usize = 4_000_000;

/// A smooth segment `[a, b]` with endpoint values taken as one-sided limits from inside.
pub struct Segment {
    pub a: f64,
    pub b: f64,
    /// Bound of `|g''|` on the segment.
    pub curvature: f64,
}

struct Cell {
    upper: f64,
    a: f64,
    b: f64,
    va: f64,
    vb: f64,
    curvature: f64,
    depth: u32,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.upper.total_cmp(&o.upper) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.total_cmp(&o.upper)
    }
}

/// Enclosure of `max g` over the union of segments.
///
/// `value(t, side)` evaluates `g` (with one-sided limits at segment ends), `slope(t)` its
/// derivative (used only to locate interior maxima quickly), `subdivisions` the number of
/// initial cells per unit length.
pub fn max_on_segments(
    segments: &[Segment],
    value: &dyn Fn(f64, Side) -> f64,
    slope: &dyn Fn(f64) -> f64,
    subdivisions: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut heap = BinaryHeap::new();
    for s in segments {
        let cells = ((s.b - s.a) * subdivisions as f64).ceil().max(1.0) as usize;
        let w = (s.b - s.a) / cells as f64;
        let mut prev = value(s.a, Side::Right);
        let mut dprev = slope(s.a);
        for c in 0..cells {
            let a = s.a + c as f64 * w;
            let b = if c + 1 == cells { s.b } else { a + w };
            let vb = value(b, if c + 1 == cells { Side::Left } else { Side::Right });
            let db = slope(b);
            lo = lo.max(prev).max(vb);
            if dprev > 0.0 && db < 0.0 {
                // interior local maximum: bisect on the slope
                let (mut x0, mut x1) = (a, b);
                for _ in 0..60 {
                    let m = 0.5 * (x0 + x1);
                    if slope(m) > 0.0 {
                        x0 = m;
                    } else {
                        x1 = m;
                    }
                }
                lo = lo.max(value(0.5 * (x0 + x1), Side::Right));
            }
            heap.push(Cell {
                upper: prev.max(vb) + s.curvature * (b - a) * (b - a) / 8.0,
                a,
                b,
                va: prev,
                vb,
                curvature: s.curvature,
                depth: 0,
            });
            prev = vb;
            dprev = db;
        }
    }
    let mut hi = lo;
    let mut nodes = 0usize;
    while let Some(c) = heap.pop() {
        if c.upper <= lo + tol {
            hi = hi.max(c.upper);
            break;
        }
        nodes += 1;
        if nodes > NODE_BUDGET || c.depth > 60 {
            let best = CertifiedValue::new(lo, c.upper.max(lo), Method::GridRefine);
            return Err(Error::ToleranceNotMet {
                best,
                requested: tol,
            });
        }
        let m = 0.5 * (c.a + c.b);
        let vm = value(m, Side::Right);
        lo = lo.max(vm);
        let half = 0.5 * (c.b - c.a);
        for (a, b, va, vb) in [(c.a, m, c.va, vm), (m, c.b, vm, c.vb)] {
            let upper = va.max(vb) + c.curvature * half * half / 8.0;
            if upper > lo + tol {
                heap.push(Cell {
                    upper,
                    a,
                    b,
                    va,
                    vb,
                    curvature: c.curvature,
                    depth: c.depth + 1,
                });
            } else {
                hi = hi.max(upper);
            }
        }
    }
    Ok((lo, hi.max(lo)))
}

/// Enclosure of `max_t σ p(t)` for a trigonometric polynomial.
pub fn trig_max(p: &TrigPoly, sign: f64, tol: f64) -> Result<(f64, f64)> {
    let m = p.len().max(1);
    let dp = p.derivative(1);
    let curvature = p.derivative_bound(2);
    let slack = 8.0 * f64::EPSILON * (m as f64) * p.derivative_bound(0);
    let seg = [Segment {
        a: 0.0,
        b: 1.0,
        curvature,
    }];
    let (lo, hi) = max_on_segments(
        &seg,
        &|t, _| sign * p.eval(t),
        &|t| sign * dp.eval(t),
        32 * m,
        tol,
    )?;
    Ok((lo - slack, hi + slack))
}

/// Enclosure of `max_t σ (τ(t) + q(t))` for trig + piecewise.
pub fn mixed_max(p: &TrigPoly, q: &PiecewisePoly, sign: f64, tol: f64) -> Result<(f64, f64)> {
    let m = p.len().max(1);
    let dp = p.derivative(1);
    let dq = q.piecewise_derivative(1);
    let trig_curv = p.derivative_bound(2);
    let segments: Vec<Segment> = (0..q.num_pieces())
        .map(|i| {
            let len = q.piece_len(i);
            let d2 = poly::derivative(&poly::derivative(&q.pieces[i]));
            Segment {
                a: q.knots[i],
                b: q.knots[i] + len,
                curvature: trig_curv + poly::abs_bound(&d2, len),
            }
        })
        .collect();
    let slack = 8.0 * f64::EPSILON * ((m as f64) * p.derivative_bound(0) + q.coefficient_scale());
    let (lo, hi) = max_on_segments(
        &segments,
        &|t, side| sign * (p.eval(t) + q.eval_side(t, side)),
        &|t| sign * (dp.eval(t) + dq.eval(t)),
        32 * m + 16,
        tol,
    )?;
    Ok((lo - slack, hi + slack))
}

/// Enclosure of `sup |g|` for a function known only through samples and a Lipschitz bound.
pub fn lipschitz_abs_max(
    g: &dyn Fn(f64) -> Result<f64>,
    lipschitz: f64,
    tol: f64,
    budget: usize,
) -> Result<CertifiedValue> {
    let n = 1024usize;
    let mut vals = Vec::with_capacity(n + 1);
    for i in 0..=n {
        vals.push(g(i as f64 / n as f64)?.abs());
    }
    let mut lo = vals.iter().cloned().fold(0.0, f64::max);
    // golden-section polish of the best grid candidates
    let mut order: Vec<usize> = (1..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    for &i in order.iter().take(8) {
        let (mut a, mut b) = ((i - 1) as f64 / n as f64, (i + 1) as f64 / n as f64);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..40 {
            let x1 = b - r * (b - a);
            let x2 = a + r * (b - a);
            let (f1, f2) = (g(x1)?.abs(), g(x2)?.abs());
            lo = lo.max(f1).max(f2);
            if f1 > f2 {
                b = x2;
            } else {
                a = x1;
            }
        }
    }
    // branch and bound with the Lipschitz bound
    let mut stack: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|i| (i as f64 / n as f64, (i + 1) as f64 / n as f64, vals[i], vals[i + 1]))
        .collect();
    let mut hi = lo;
    let mut evals = 0usize;
    while let Some((a, b, va, vb)) = stack.pop() {
        let upper = 0.5 * (va + vb + lipschitz * (b - a));
        if upper <= lo + tol {
            hi = hi.max(upper.min(va.max(vb) + lipschitz * (b - a) / 2.0));
            continue;
        }
        evals += 1;
        if evals > budget {
            let rest = stack
                .iter()
                .map(|&(a, b, va, vb)| 0.5 * (va + vb + lipschitz * (b - a)))
                .fold(upper, f64::max);
            return Err(Error::ToleranceNotMet {
                best: CertifiedValue::new(lo, rest.max(lo), Method::GridRefine),
                requested: tol,
            });
        }
        let m = 0.5 * (a + b);
        let vm = g(m)?.abs();
        lo = lo.max(vm);
        stack.push((a, m, va, vm));
        stack.push((m, b, vm, vb));
    }
    Ok(CertifiedValue::new(lo, hi.max(lo), Method::GridRefine))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_max_is_one() {
        for n in 1..5 {
            let p = TrigPoly::cosine(n);
            let (lo, hi) = trig_max(&p, 1.0, 1e-12).unwrap();
            assert!(lo <= 1.0 && hi >= 1.0 && hi - lo < 1e-11, "{lo} {hi}");
        }
    }

    #[test]
    fn shifted_sum_max() {
        // cos(2πt) + 0.5 sin(4πt): compare with dense sampling
        let p = TrigPoly::new(0.0, vec![1.0, 0.0], vec![0.0, 0.5]);
        let (lo, hi) = trig_max(&p, 1.0, 1e-12).unwrap();
        let dense = (0..200_000)
            .map(|i| p.eval(i as f64 / 200_000.0))
            .fold(f64::MIN, f64::max);
        assert!(dense <= hi + 1e-12 && lo <= dense + 1e-9);
    }

    #[test]
    fn mixed_square_wave_plus_cosine() {
        // sign cos(2πt) + cos(2πt) peaks at 2
        let q = PiecewisePoly::square_wave(1);
        let (lo, hi) = mixed_max(&TrigPoly::cosine(1), &q, 1.0, 1e-12).unwrap();
        assert!(lo <= 2.0 && hi >= 2.0 && hi - lo < 1e-11);
        let (lo, hi) = mixed_max(&TrigPoly::cosine(1), &q, -1.0, 1e-12).unwrap();
        assert!(lo <= 2.0 && hi >= 2.0 && hi - lo < 1e-11);
    }

    #[test]
    fn lipschitz_engine_on_abs_sine() {
        let g = |t: f64| Ok((2.0 * std::f64::consts::PI * t).sin().abs());
        let v = lipschitz_abs_max(&g, 2.0 * std::f64::consts::PI, 1e-6, 1_000_000).unwrap();
        assert!(v.lo <= 1.0 && v.hi >= 1.0 - 1e-15 && v.width() <= 1e-6);
    }
}
