//! The moduli `ω₂(f,h)`, `W₂(f,χ_h^k)` and `W₂*(f,χ_h^k)` as certified values.
//!
//! Suprema over the width `u ∈ (0, h]` are certified by branch and bound on u-cells.
//! For a cell `[a, b]` the deviation `r(t,u)` is bounded by one of
//!
//! * a curvature bound in `u` when `f ∈ C¹` with bounded piecewise `D²f`;
//! * a kernel-derivative bound `V₂‖f − c‖/a²` (kernels of order ≥ 2, cells away from 0);
//! * a decomposition `f = Σ J_i saw(·−t_i) + Σ K_i kink(·−t_i) + f₂` whose jump and kink
//!   terms are monotone in `u` at each fixed `t` (known direction on each side of `t_i`),
//!   with `f₂ ∈ C¹` handled by the curvature bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::bspline::BSplineKernel;
use crate::certified::{CertifiedValue, Method};
use crate::error::{Error, Result};
use crate::function::{Exact, PeriodicFunction};
use crate::piecewise::{norm01, PiecewisePoly};
use crate::smoothing;
use crate::supnorm;

/// Default absolute enclosure tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Which deviation is maximized over `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulus {
    /// `f − f*χ_u^k`
    W2 { k: u32 },
    /// `Δ_u² f`
    Omega2,
}

const UNIFORM_SAMPLES: usize = 24;
const GEOMETRIC_SAMPLES: usize = 8;
const CELL_BUDGET: usize = 6000;

fn saw() -> PiecewisePoly {
    PiecewisePoly {
        knots: vec![0.0],
        pieces: vec![vec![0.5, -1.0]],
        continuity: -1,
    }
}

fn kink() -> PiecewisePoly {
    PiecewisePoly {
        knots: vec![0.0],
        pieces: vec![vec![-1.0 / 12.0, 0.5, -0.5]],
        continuity: 0,
    }
}

impl Modulus {
    fn residual(&self, e: &Exact, u: f64) -> Exact {
        if u == 0.0 {
            return Exact::default();
        }
        match *self {
            Modulus::W2 { k } => smoothing::deviation_exact(e, u, k),
            Modulus::Omega2 => e.second_difference(u),
        }
    }

    /// Monotone parts of the unit jump and kink terms at width `u`.
    fn unit_terms(&self, u: f64) -> (PiecewisePoly, PiecewisePoly) {
        if u == 0.0 {
            return (PiecewisePoly::constant(0.0), PiecewisePoly::constant(0.0));
        }
        let (s, q) = (saw(), kink());
        match *self {
            Modulus::W2 { k } => {
                let conv = |p: &PiecewisePoly| {
                    let mut c = p.clone();
                    for _ in 0..k {
                        c = c.box_convolve(u);
                    }
                    c
                };
                let st = s.sub(&conv(&s));
                let kt = q.sub(&conv(&q)).add_constant(-u * u * k as f64 / 24.0);
                (st, kt)
            }
            Modulus::Omega2 => (s.second_difference(u), q.second_difference(u).add_constant(u * u)),
        }
    }

    /// Sign of the increment of the jump term right of the jump, and of the kink term.
    fn directions(&self) -> (f64, f64) {
        match self {
            Modulus::W2 { .. } => (1.0, -1.0),
            Modulus::Omega2 => (-1.0, 1.0),
        }
    }

    fn decomposition_valid(&self, ub: f64) -> bool {
        match *self {
            Modulus::W2 { k } => k as f64 * ub <= 1.0,
            Modulus::Omega2 => ub <= 0.5,
        }
    }

    /// `|∂²_u r|` for `f ∈ C¹` with `|D²f| ≤ d2`.
    fn smooth_curvature(&self, d2: f64) -> f64 {
        match *self {
            Modulus::W2 { k } => d2 * k as f64 / 12.0,
            Modulus::Omega2 => 2.0 * d2,
        }
    }

    /// Curvature of the remainder after removing the monotone jump/kink parts.
    fn remainder_curvature(&self, d2: f64, sum_kinks: f64) -> f64 {
        let s = sum_kinks.abs();
        match *self {
            Modulus::W2 { k } => (d2 + 2.0 * s) * k as f64 / 12.0,
            Modulus::Omega2 => 2.0 * (d2 + s) + 2.0 * s,
        }
    }

    /// Bound on the sup of the unit jump and kink terms (for discarded tiny singularities).
    fn unit_term_bounds(&self) -> (f64, f64) {
        match self {
            Modulus::W2 { .. } => (1.0, 1.0),
            Modulus::Omega2 => (2.0, 1.0),
        }
    }
}

struct Analysis {
    d2: f64,
    /// `(t, jump, kink)` of the retained singularities.
    sing: Vec<(f64, f64, f64)>,
    sum_kinks: f64,
    slack: f64,
    smooth: bool,
    /// `‖f − c‖` for the centering constant `c`.
    half_osc: f64,
}

fn analyse(kind: Modulus, e: &Exact, tol: f64) -> Result<Analysis> {
    let d2 = e.second_derivative_bound();
    let raw = e.singularities();
    let scale = e.pw.as_ref().map_or(0.0, |p| p.coefficient_scale()) + e.trig.derivative_bound(0);
    let thr = 1e-13 * scale.max(1e-300);
    let (bj, bk) = kind.unit_term_bounds();
    let mut sing = Vec::new();
    let mut slack = 0.0;
    for s in raw {
        if s.jump.abs() <= thr && s.kink.abs() <= thr {
            // a discarded singularity perturbs r by at most its unit bound, twice over a cell
            slack += 2.0 * (bj * s.jump.abs() + bk * s.kink.abs());
        } else {
            sing.push((s.t, s.jump, s.kink));
        }
    }
    let sum_kinks = sing.iter().map(|s| s.2).sum();
    let (mx_lo, mx_hi) = e.max(1.0, tol)?;
    let (mn_lo, mn_hi) = e.max(-1.0, tol)?;
    let _ = (mx_lo, mn_lo);
    Ok(Analysis {
        d2,
        smooth: sing.is_empty(),
        sing,
        sum_kinks,
        slack,
        half_osc: 0.5 * (mx_hi + mn_hi),
    })
}

struct UCell {
    upper: f64,
    ua: f64,
    ub: f64,
    da: f64,
    db: f64,
    depth: u32,
}

impl PartialEq for UCell {
    fn eq(&self, o: &Self) -> bool {
        self.upper.total_cmp(&o.upper) == Ordering::Equal
    }
}
impl Eq for UCell {}
impl PartialOrd for UCell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for UCell {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.total_cmp(&o.upper)
    }
}

struct Engine<'a> {
    kind: Modulus,
    f: &'a Exact,
    an: Analysis,
    inner_tol: f64,
    v2: Option<f64>,
}

impl Engine<'_> {
    fn value(&self, u: f64) -> Result<(f64, f64)> {
        if u == 0.0 {
            return Ok((0.0, 0.0));
        }
        let v = self.kind.residual(self.f, u).sup_norm(self.inner_tol)?;
        Ok((v.lo, v.hi))
    }

    fn cell_upper(&self, ua: f64, ub: f64, da: f64, db: f64) -> Result<f64> {
        let w = ub - ua;
        let mut best = f64::INFINITY;
        if self.an.smooth {
            best = da.max(db) + self.kind.smooth_curvature(self.an.d2) * w * w / 8.0;
        }
        if let (Some(v2), Modulus::W2 { .. }) = (self.v2, self.kind) {
            if ua > 0.0 {
                best = best.min(da.max(db) + v2 * self.an.half_osc / (ua * ua) * w * w / 8.0);
            }
        }
        if !self.an.smooth && self.kind.decomposition_valid(ub) {
            // only pay for the decomposition when the cheap bounds are loose
            let cheap = best;
            if !(cheap <= da.max(db) + self.inner_tol) {
                best = best.min(self.decomposition_upper(ua, ub)?);
            }
        }
        if !best.is_finite() {
            return Err(Error::Unsupported(format!(
                "no certified u-bound for {:?} on [{ua}, {ub}]",
                self.kind
            )));
        }
        Ok(best + self.an.slack)
    }

    fn decomposition_upper(&self, ua: f64, ub: f64) -> Result<f64> {
        let (sa, ka) = self.kind.unit_terms(ua);
        let (sb, kb) = self.kind.unit_terms(ub);
        let ds = sb.sub(&sa);
        let dk = kb.sub(&ka);
        let right = |_: usize, a: f64, b: f64| norm01(0.5 * (a + b)) < 0.5;
        let ds_r = ds.mask(right);
        let ds_l = ds.mask(|i, a, b| !right(i, a, b));
        let (sig_r, sig_k) = self.kind.directions();
        let mut p_terms: Vec<(f64, PiecewisePoly)> = Vec::new();
        let mut q_terms: Vec<(f64, PiecewisePoly)> = Vec::new();
        for &(t, j, k) in &self.an.sing {
            if j != 0.0 {
                for (part, sig) in [(&ds_r, sig_r), (&ds_l, -sig_r)] {
                    if j * sig > 0.0 {
                        p_terms.push((j, part.shift(-t)));
                    } else {
                        q_terms.push((-j, part.shift(-t)));
                    }
                }
            }
            if k != 0.0 {
                if k * sig_k > 0.0 {
                    p_terms.push((k, dk.shift(-t)));
                } else {
                    q_terms.push((-k, dk.shift(-t)));
                }
            }
        }
        let collect = |terms: &[(f64, PiecewisePoly)]| -> Exact {
            if terms.is_empty() {
                return Exact::default();
            }
            let refs: Vec<(f64, &PiecewisePoly)> = terms.iter().map(|(w, p)| (*w, p)).collect();
            Exact::from_pw(PiecewisePoly::sum(&refs))
        };
        let p = collect(&p_terms);
        let q = collect(&q_terms);
        let ra = self.kind.residual(self.f, ua);
        let rb = self.kind.residual(self.f, ub);
        let tol = self.inner_tol;
        let m1 = ra.add(&p).max(1.0, tol)?.1;
        let m2 = rb.add(&q).max(1.0, tol)?.1;
        let m3 = q.sub(&ra).max(1.0, tol)?.1;
        let m4 = p.sub(&rb).max(1.0, tol)?.1;
        let w = ub - ua;
        let curv = self.kind.remainder_curvature(self.an.d2, self.an.sum_kinks);
        // rounding in the term algebra
        let round = 1e-13 * (1.0 + self.an.half_osc);
        Ok(m1.max(m2).max(m3).max(m4) + curv * w * w / 8.0 + round)
    }
}

fn initial_samples(h: f64) -> Vec<f64> {
    let base = h / UNIFORM_SAMPLES as f64;
    let mut us: Vec<f64> = (1..=GEOMETRIC_SAMPLES)
        .rev()
        .map(|i| base * 0.5f64.powi(i as i32))
        .collect();
    us.extend((1..=UNIFORM_SAMPLES).map(|j| h * j as f64 / UNIFORM_SAMPLES as f64));
    us
}

/// Certified `sup_{0<u≤h} ‖r(·,u)‖` for an exact function.
pub fn u_supremum(kind: Modulus, e: &Exact, h: f64, tol: f64) -> Result<CertifiedValue> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("h = {h} must be > 0")));
    }
    let h = match kind {
        // Δ_{1−u} = Δ_u by periodicity
        Modulus::Omega2 => h.min(0.5),
        Modulus::W2 { k } => {
            BSplineKernel::new(h, k)?;
            h
        }
    };
    let is_const = e.trig.derivative_bound(1) == 0.0
        && e.pw.as_ref().map_or(true, |p| p.pieces.iter().all(|q| q.iter().skip(1).all(|&c| c == 0.0)) && p.singularities().iter().all(|s| s.jump == 0.0));
    if is_const {
        return Ok(CertifiedValue::exact(0.0));
    }
    let an = analyse(kind, e, tol)?;
    let v2 = match kind {
        Modulus::W2 { k } => BSplineKernel::new(1.0, k)?.unit_u_curvature(),
        Modulus::Omega2 => None,
    };
    let eng = Engine {
        kind,
        f: e,
        an,
        inner_tol: tol / 4.0,
        v2,
    };
    let us = initial_samples(h);
    let mut vals = Vec::with_capacity(us.len());
    for &u in &us {
        vals.push(eng.value(u)?);
    }
    let mut lo = vals.iter().map(|v| v.0).fold(0.0, f64::max);
    // parabolic refinement around the best samples
    let mut order: Vec<usize> = (1..us.len() - 1).collect();
    order.sort_by(|&a, &b| vals[b].0.total_cmp(&vals[a].0));
    for &i in order.iter().take(5) {
        let (x0, x1, x2) = (us[i - 1], us[i], us[i + 1]);
        let (y0, y1, y2) = (vals[i - 1].0, vals[i].0, vals[i + 1].0);
        let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        if den.abs() > 0.0 {
            let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
            let xv = x1 - 0.5 * num / den;
            if xv > x0 && xv < x2 {
                lo = lo.max(eng.value(xv)?.0);
            }
        }
    }
    let mut heap = BinaryHeap::new();
    let mut prev = (0.0, 0.0);
    for (&u, &v) in us.iter().zip(&vals) {
        let upper = eng.cell_upper(prev.0, u, prev.1, v.1)?;
        heap.push(UCell {
            upper,
            ua: prev.0,
            ub: u,
            da: prev.1,
            db: v.1,
            depth: 0,
        });
        prev = (u, v.1);
    }
    let mut hi = lo;
    let mut cells = 0usize;
    while let Some(c) = heap.pop() {
        if c.upper <= lo + tol {
            hi = hi.max(c.upper);
            break;
        }
        cells += 1;
        if cells > CELL_BUDGET || c.depth > 50 {
            return Err(Error::ToleranceNotMet {
                best: CertifiedValue::new(lo, c.upper.max(lo), Method::GridRefine),
                requested: tol,
            });
        }
        // geometric split near 0 keeps the first cell proportionate
        let m = if c.ua == 0.0 { 0.25 * c.ub } else { 0.5 * (c.ua + c.ub) };
        let (vlo, vhi) = eng.value(m)?;
        lo = lo.max(vlo);
        for (a, b, da, db) in [(c.ua, m, c.da, vhi), (m, c.ub, vhi, c.db)] {
            let upper = eng.cell_upper(a, b, da, db)?;
            if upper > lo + tol {
                heap.push(UCell {
                    upper,
                    ua: a,
                    ub: b,
                    da,
                    db,
                    depth: c.depth + 1,
                });
            } else {
                hi = hi.max(upper);
            }
        }
    }
    Ok(CertifiedValue::new(lo, hi.max(lo), Method::GridRefine))
}

/// u-supremum for sampled functions: Lipschitz bound in `u`.
fn sampled_u_supremum(kind: Modulus, f: &PeriodicFunction, h: f64, tol: f64) -> Result<CertifiedValue> {
    let lip = match f.lipschitz_hint() {
        Some(l) => l,
        None => f.estimate_lipschitz()?,
    };
    let h = if kind == Modulus::Omega2 { h.min(0.5) } else { h };
    let (lu, lt) = match kind {
        Modulus::W2 { k } => (lip * BSplineKernel::new(1.0, k)?.unit_first_abs_moment(), 2.0 * lip),
        Modulus::Omega2 => (2.0 * lip, 4.0 * lip),
    };
    let value = |u: f64| -> Result<f64> {
        let r = sampled_residual(kind, f, u)?;
        Ok(supnorm::lipschitz_abs_max(&|t| r.eval(t), lt, tol / 4.0, 200_000)?.hi)
    };
    let g = |u: f64| -> Result<f64> { if u <= 0.0 { Ok(0.0) } else { value(u * h) } };
    let v = supnorm::lipschitz_abs_max(&g, lu * h, tol / 2.0, 20_000)?;
    Ok(v.widen(tol / 4.0).with_method(Method::Quadrature))
}

fn sampled_residual(kind: Modulus, f: &PeriodicFunction, u: f64) -> Result<PeriodicFunction> {
    Ok(match kind {
        Modulus::W2 { k } => f.sub(&smoothing::convolve(f, &BSplineKernel::new(u, k)?)?),
        Modulus::Omega2 => f.second_difference(u),
    })
}

/// `ω₂(f,h) = sup_{0<u≤h} ‖Δ_u²f‖`.
pub fn omega2(f: &PeriodicFunction, h: f64, tol: f64) -> Result<CertifiedValue> {
    match f.exact() {
        Some(e) => u_supremum(Modulus::Omega2, &e, h, tol),
        None => sampled_u_supremum(Modulus::Omega2, f, h, tol),
    }
}

/// `W₂(f,χ_h^k) = ‖f − f*χ_h^k‖`.
pub fn w2(f: &PeriodicFunction, h: f64, k: u32, tol: f64) -> Result<CertifiedValue> {
    let kern = BSplineKernel::new(h, k)?;
    match f.exact() {
        Some(e) => smoothing::deviation_exact(&e, h, k).sup_norm(tol),
        None => {
            let r = f.sub(&smoothing::convolve(f, &kern)?);
            let lip = 2.0 * f.lipschitz_hint().map_or_else(|| f.estimate_lipschitz(), Ok)?;
            Ok(supnorm::lipschitz_abs_max(&|t| r.eval(t), lip, tol, 4_000_000)?.with_method(Method::Quadrature))
        }
    }
}

/// `W₂*(f,χ_h^k) = sup_{0<u≤h} W₂(f,χ_u^k)`.
pub fn w2_star(f: &PeriodicFunction, h: f64, k: u32, tol: f64) -> Result<CertifiedValue> {
    match f.exact() {
        Some(e) => u_supremum(Modulus::W2 { k }, &e, h, tol),
        None => sampled_u_supremum(Modulus::W2 { k }, f, h, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::TrigPoly;
    use std::f64::consts::PI;

    fn cos(n: usize) -> PeriodicFunction {
        PeriodicFunction::Trig(TrigPoly::cosine(n))
    }

    #[test]
    fn constants_have_zero_moduli() {
        let c = PeriodicFunction::constant(2.0);
        assert_eq!(omega2(&c, 0.3, DEFAULT_TOL).unwrap().hi, 0.0);
        assert_eq!(w2_star(&c, 0.3, 2, DEFAULT_TOL).unwrap().hi, 0.0);
        assert!(w2(&c, 0.3, 2, DEFAULT_TOL).unwrap().hi < 1e-14);
    }

    #[test]
    fn cosine_values() {
        let v = w2(&cos(1), 0.5, 1, DEFAULT_TOL).unwrap();
        assert!(v.lo <= 1.0 - 2.0 / PI + 1e-12 && v.hi >= 1.0 - 2.0 / PI - 1e-12);
        for h in [0.1, 0.25, 0.5] {
            let o = omega2(&cos(1), h, DEFAULT_TOL).unwrap();
            let exact = 2.0 * (1.0 - (2.0 * PI * h).cos());
            assert!(o.lo - 1e-12 <= exact && exact <= o.hi + 1e-12 && o.width() <= DEFAULT_TOL);
            let s = w2_star(&cos(1), h, 2, DEFAULT_TOL).unwrap();
            let m = (PI * h).sin() / (PI * h);
            let exact = 1.0 - m * m;
            assert!(s.lo - 1e-12 <= exact && exact <= s.hi + 1e-12, "{s:?} {exact}");
        }
    }

    #[test]
    fn omega2_beyond_half_period() {
        let o = omega2(&cos(1), 0.9, DEFAULT_TOL).unwrap();
        assert!(o.contains(4.0) || (o.hi - 4.0).abs() < 1e-9);
    }

    #[test]
    fn square_wave_moduli() {
        let sq = PeriodicFunction::SquareWave(1);
        // the step term saturates: sup_t |f − f*χ_u| = 1 for every u ≤ 1/2
        let s = w2_star(&sq, 0.5, 1, 1e-6).unwrap();
        assert!(s.lo <= 1.0 + 1e-12 && s.hi >= 1.0 - 1e-12 && s.width() <= 1e-6, "{s:?}");
        let o = omega2(&sq, 0.5, 1e-6).unwrap();
        assert!(o.contains(4.0) || (o.lo - 4.0).abs() < 1e-9, "{o:?}");
    }

    #[test]
    fn kinked_function_via_decomposition() {
        // triangle wave: W₂*(ε₁, χ_h) with h = 1/4 against a dense brute force
        let tri = smoothing::convolve(&PeriodicFunction::SquareWave(1), &BSplineKernel::new(0.5, 1).unwrap()).unwrap();
        let v = w2_star(&tri, 0.25, 1, 1e-7).unwrap();
        let e = tri.exact().unwrap();
        let brute = (1..=400)
            .map(|i| {
                let u = 0.25 * i as f64 / 400.0;
                smoothing::deviation_exact(&e, u, 1).sup_norm(1e-10).unwrap().lo
            })
            .fold(0.0, f64::max);
        assert!(v.lo <= brute + 1e-9 && brute <= v.hi + 1e-12, "{v:?} {brute}");
        assert!(v.width() <= 1e-7);
    }

    #[test]
    fn higher_order_kernel_uses_derivative_bound() {
        let sq = PeriodicFunction::SquareWave(1);
        let v = w2_star(&sq, 0.5, 4, 1e-3).unwrap();
        assert!(v.width() <= 1e-3 && v.hi <= 2.0);
    }

    #[test]
    fn sampled_function_w2() {
        let f = PeriodicFunction::closure("cos", |t| (2.0 * PI * t).cos(), Some(2.0 * PI), true);
        let v = w2(&f, 0.5, 1, 1e-4).unwrap();
        assert!(v.lo <= 1.0 - 2.0 / PI + 1e-9 && v.hi >= 1.0 - 2.0 / PI - 1e-9);
    }
}
