use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

/// Knots closer than this (cyclically) are merged.
pub const KNOT_SNAP: f64 = 1e-12;

/// 1-periodic piecewise polynomial.
///
/// Piece `i` lives on `[knots[i], knots[i+1])`, the last one wrapping to `knots[0] + 1`,
/// and is stored in the local variable `t − knots[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    pub knots: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
    /// Highest derivative order that is continuous; `-1` allows jumps.
    pub continuity: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Jump data of a piecewise polynomial at a knot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub t: f64,
    /// `f(t+) − f(t−)`
    pub jump: f64,
    /// `f'(t+) − f'(t−)`
    pub kink: f64,
}

pub(crate) fn norm01(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl PiecewisePoly {
    pub fn new(knots: Vec<f64>, pieces: Vec<Vec<f64>>, continuity: i32) -> Result<Self> {
        let p = PiecewisePoly {
            knots,
            pieces,
            continuity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(c: f64) -> Self {
        PiecewisePoly {
            knots: vec![0.0],
            pieces: vec![vec![c]],
            continuity: i32::MAX / 2,
        }
    }

    /// `sign cos(2πnt)`, right-continuous at the jumps.
    pub fn square_wave(n: usize) -> Self {
        let m = 2 * n;
        let knots: Vec<f64> = (0..m).map(|i| (2 * i + 1) as f64 / (4 * n) as f64).collect();
        let pieces = (0..m)
            .map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 }])
            .collect();
        PiecewisePoly {
            knots,
            pieces,
            continuity: -1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() || self.knots.len() != self.pieces.len() {
            return Err(Error::InvalidArgument(format!(
                "piecewise polynomial needs one piece per knot (got {} knots, {} pieces)",
                self.knots.len(),
                self.pieces.len()
            )));
        }
        if self.pieces.iter().any(|p| p.is_empty()) {
            return Err(Error::InvalidArgument("empty polynomial piece".into()));
        }
        for (i, &k) in self.knots.iter().enumerate() {
            if !(0.0..1.0).contains(&k) {
                return Err(Error::InvalidArgument(format!("knot {i} = {k} outside [0,1)")));
            }
            if i > 0 && k <= self.knots[i - 1] {
                return Err(Error::InvalidArgument(format!(
                    "knots must be strictly increasing (knot {i})"
                )));
            }
        }
        if self
            .pieces
            .iter()
            .flatten()
            .any(|c| !c.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn num_pieces(&self) -> usize {
        self.knots.len()
    }

    pub fn degree(&self) -> usize {
        self.pieces.iter().map(|p| p.len() - 1).max().unwrap_or(0)
    }

    pub fn piece_len(&self, i: usize) -> f64 {
        let n = self.knots.len();
        if i + 1 < n {
            self.knots[i + 1] - self.knots[i]
        } else {
            self.knots[0] + 1.0 - self.knots[n - 1]
        }
    }

    /// Piece index and local coordinate of `t` (right-continuous convention).
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let t = norm01(t);
        let n = self.knots.len();
        if t < self.knots[0] {
            return (n - 1, t + 1.0 - self.knots[n - 1]);
        }
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        (i, t - self.knots[i])
    }

    fn locate_left(&self, t: f64) -> (usize, f64) {
        let t = norm01(t);
        let n = self.knots.len();
        if t <= self.knots[0] {
            return (n - 1, t + 1.0 - self.knots[n - 1]);
        }
        let i = self.knots.partition_point(|&k| k < t) - 1;
        (i, t - self.knots[i])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (i, x) = self.locate(t);
        poly::eval(&self.pieces[i], x)
    }

    pub fn eval_side(&self, t: f64, side: Side) -> f64 {
        let (i, x) = match side {
            Side::Right => self.locate(t),
            Side::Left => self.locate_left(t),
        };
        poly::eval(&self.pieces[i], x)
    }

    pub fn scale(&self, s: f64) -> PiecewisePoly {
        PiecewisePoly {
            knots: self.knots.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| p.iter().map(|c| c * s).collect())
                .collect(),
            continuity: self.continuity,
        }
    }

    pub fn add_constant(&self, c: f64) -> PiecewisePoly {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p[0] += c;
        }
        out
    }

    /// `t ↦ f(t + s)`.
    pub fn shift(&self, s: f64) -> PiecewisePoly {
        let mut pairs: Vec<(f64, Vec<f64>)> = self
            .knots
            .iter()
            .zip(&self.pieces)
            .map(|(&k, p)| (norm01(k - s), p.clone()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots = Vec::with_capacity(pairs.len());
        let mut pieces: Vec<Vec<f64>> = Vec::with_capacity(pairs.len());
        for (k, p) in pairs {
            if let Some(&last) = knots.last() {
                if k - last <= KNOT_SNAP {
                    // degenerate (near-zero length) piece: keep the later one
                    *pieces.last_mut().unwrap() = poly::taylor_shift(&p, last - k);
                    continue;
                }
            }
            knots.push(k);
            pieces.push(p);
        }
        if knots.len() > 1 && knots[0] + 1.0 - knots[knots.len() - 1] <= KNOT_SNAP {
            // the last piece has (near) zero length
            pieces.pop();
            knots.pop();
        }
        PiecewisePoly {
            knots,
            pieces,
            continuity: self.continuity,
        }
    }

    /// Re-express on a refined knot set; `probe` points select the piece right of each cluster.
    fn refine(&self, reps: &[f64], probes: &[f64]) -> Vec<Vec<f64>> {
        reps.iter()
            .zip(probes)
            .map(|(&r, &pr)| {
                let (i, x) = self.locate(pr);
                poly::taylor_shift(&self.pieces[i], x - (pr - r))
            })
            .collect()
    }

    /// Merge knot sets with cyclic snapping; returns `(representatives, probes)`.
    fn merged_knots(sets: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
        let mut all: Vec<f64> = sets.iter().flat_map(|s| s.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        let mut reps: Vec<f64> = Vec::new();
        let mut probes: Vec<f64> = Vec::new();
        for k in all {
            match reps.last() {
                Some(_) if k - probes[probes.len() - 1] <= KNOT_SNAP => {
                    *probes.last_mut().unwrap() = k;
                }
                _ => {
                    reps.push(k);
                    probes.push(k);
                }
            }
        }
        // wrap-around cluster: knots just below 1 merge into the first knot
        while reps.len() > 1 && reps[0] + 1.0 - probes[probes.len() - 1] <= KNOT_SNAP {
            reps.pop();
            probes.pop();
        }
        (reps, probes)
    }

    pub fn add(&self, other: &PiecewisePoly) -> PiecewisePoly {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &PiecewisePoly) -> PiecewisePoly {
        self.linear_combination(1.0, other, -1.0)
    }

    pub fn linear_combination(&self, a: f64, other: &PiecewisePoly, b: f64) -> PiecewisePoly {
        Self::sum(&[(a, self), (b, other)])
    }

    /// `Σ w_i f_i` on the merged knot set.
    pub fn sum(terms: &[(f64, &PiecewisePoly)]) -> PiecewisePoly {
        let sets: Vec<&[f64]> = terms.iter().map(|(_, p)| p.knots.as_slice()).collect();
        let (reps, probes) = Self::merged_knots(&sets);
        let mut pieces = vec![Vec::new(); reps.len()];
        for (w, p) in terms {
            if *w == 0.0 {
                continue;
            }
            for (acc, q) in pieces.iter_mut().zip(p.refine(&reps, &probes)) {
                poly::add_assign(acc, &q, *w);
            }
        }
        for p in &mut pieces {
            if p.is_empty() {
                p.push(0.0);
            }
        }
        let continuity = terms.iter().map(|(_, p)| p.continuity).min().unwrap_or(0);
        PiecewisePoly {
            knots: reps,
            pieces,
            continuity,
        }
    }

    pub fn mean(&self) -> f64 {
        (0..self.num_pieces())
            .map(|i| {
                let prim = poly::integral(&self.pieces[i]);
                poly::eval(&prim, self.piece_len(i))
            })
            .sum()
    }

    /// Periodic antiderivative with zero mean; `self` must have zero mean.
    pub fn antiderivative(&self) -> PiecewisePoly {
        let mut acc = 0.0;
        let mut pieces = Vec::with_capacity(self.num_pieces());
        for i in 0..self.num_pieces() {
            let mut prim = poly::integral(&self.pieces[i]);
            prim[0] = acc;
            acc = poly::eval(&prim, self.piece_len(i));
            pieces.push(prim);
        }
        let mut g = PiecewisePoly {
            knots: self.knots.clone(),
            pieces,
            continuity: self.continuity.saturating_add(1).max(0),
        };
        let m = g.mean();
        for p in &mut g.pieces {
            p[0] -= m;
        }
        g
    }

    /// Derivative of order `order`; allowed up to one order beyond the continuity flag
    /// (the result then carries jumps).
    pub fn derivative(&self, order: u32) -> Result<PiecewisePoly> {
        if order as i64 > self.continuity as i64 + 1 {
            return Err(Error::Unsupported(format!(
                "derivative of order {order} of a piecewise polynomial with continuity {}",
                self.continuity
            )));
        }
        let mut pieces = self.pieces.clone();
        for _ in 0..order {
            pieces = pieces.iter().map(|p| poly::derivative(p)).collect();
        }
        Ok(PiecewisePoly {
            knots: self.knots.clone(),
            pieces,
            continuity: (self.continuity - order as i32).max(-1),
        })
    }

    /// Unchecked piecewise derivative (ignores singular parts at knots).
    pub fn piecewise_derivative(&self, order: u32) -> PiecewisePoly {
        let mut pieces = self.pieces.clone();
        for _ in 0..order {
            pieces = pieces.iter().map(|p| poly::derivative(p)).collect();
        }
        PiecewisePoly {
            knots: self.knots.clone(),
            pieces,
            continuity: -1,
        }
    }

    /// Exact convolution with the box kernel `χ_h`.
    pub fn box_convolve(&self, h: f64) -> PiecewisePoly {
        let mean = self.mean();
        let g = self.add_constant(-mean).antiderivative();
        let mut out = PiecewisePoly::sum(&[(1.0 / h, &g.shift(h / 2.0)), (-1.0 / h, &g.shift(-h / 2.0))])
            .add_constant(mean);
        out.continuity = self.continuity.saturating_add(1).max(0);
        out
    }

    /// `t ↦ f(t+u) − 2f(t) + f(t−u)`.
    pub fn second_difference(&self, u: f64) -> PiecewisePoly {
        Self::sum(&[(1.0, &self.shift(u)), (-2.0, self), (1.0, &self.shift(-u))])
    }

    pub fn singularities(&self) -> Vec<Singularity> {
        let n = self.num_pieces();
        (0..n)
            .map(|i| {
                let prev = (i + n - 1) % n;
                let len = self.piece_len(prev);
                let lp = &self.pieces[prev];
                let rp = &self.pieces[i];
                let left = poly::eval(lp, len);
                let dleft = poly::eval(&poly::derivative(lp), len);
                let right = rp[0];
                let dright = rp.get(1).copied().unwrap_or(0.0);
                Singularity {
                    t: self.knots[i],
                    jump: right - left,
                    kink: dright - dleft,
                }
            })
            .collect()
    }

    /// Enclosure of `max_t f(t)` (one-sided limits included).
    pub fn max_enclosure(&self, tol: f64) -> (f64, f64) {
        let lens: Vec<f64> = (0..self.num_pieces()).map(|i| self.piece_len(i)).collect();
        let items: Vec<(&[f64], f64)> = self
            .pieces
            .iter()
            .zip(&lens)
            .map(|(p, &l)| (p.as_slice(), l))
            .collect();
        poly::max_of_pieces(&items, tol)
    }

    /// Enclosure of `sup |f|` (one-sided limits included).
    pub fn abs_max_enclosure(&self, tol: f64) -> (f64, f64) {
        let neg: Vec<Vec<f64>> = self
            .pieces
            .iter()
            .map(|p| p.iter().map(|c| -c).collect())
            .collect();
        let mut items: Vec<(&[f64], f64)> = Vec::with_capacity(2 * self.num_pieces());
        for i in 0..self.num_pieces() {
            let l = self.piece_len(i);
            items.push((self.pieces[i].as_slice(), l));
            items.push((neg[i].as_slice(), l));
        }
        let (lo, hi) = poly::max_of_pieces(&items, tol);
        (lo.max(0.0), hi.max(0.0))
    }

    /// Upper bound of `sup |p''|` over all pieces (singular parts excluded).
    pub fn second_derivative_bound(&self) -> f64 {
        let d2 = self.piecewise_derivative(2);
        let (_, hi) = d2.abs_max_enclosure(1e-9 * (1.0 + d2.coefficient_scale()));
        hi
    }

    /// Upper bound of `sup |p'|` over all pieces.
    pub fn first_derivative_bound(&self) -> f64 {
        let d1 = self.piecewise_derivative(1);
        let (_, hi) = d1.abs_max_enclosure(1e-9 * (1.0 + d1.coefficient_scale()));
        hi
    }

    pub fn coefficient_scale(&self) -> f64 {
        (0..self.num_pieces())
            .map(|i| poly::abs_bound(&self.pieces[i], self.piece_len(i)))
            .fold(0.0, f64::max)
    }

    /// Replace every piece by zero outside the selected pieces.
    pub fn mask(&self, keep: impl Fn(usize, f64, f64) -> bool) -> PiecewisePoly {
        let mut out = self.clone();
        for i in 0..self.num_pieces() {
            let a = self.knots[i];
            let b = a + self.piece_len(i);
            if !keep(i, a, b) {
                out.pieces[i] = vec![0.0];
            }
        }
        out.continuity = -1;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat(h: f64) -> PiecewisePoly {
        // periodized χ_h² centred at 0: (1/h)(1 − |t|/h) on (−h, h)
        PiecewisePoly::new(
            vec![0.0, h, 1.0 - h],
            vec![
                vec![1.0 / h, -1.0 / (h * h)],
                vec![0.0],
                vec![0.0, 1.0 / (h * h)],
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn square_wave_values() {
        let s = PiecewisePoly::square_wave(1);
        assert_eq!(s.eval(0.0), 1.0);
        assert_eq!(s.eval(0.5), -1.0);
        assert_eq!(s.eval(0.25), -1.0);
        assert_eq!(s.eval_side(0.25, Side::Left), 1.0);
        assert_eq!(s.eval(1.9), 1.0);
    }

    #[test]
    fn hat_peak_and_derivative() {
        let f = hat(0.25);
        assert_eq!(f.eval(0.0), 4.0);
        let d = f.derivative(1).unwrap();
        assert!((d.eval(0.1) + 16.0).abs() < 1e-12);
        assert!((d.eval(0.9) - 16.0).abs() < 1e-12);
        assert_eq!(d.eval(0.5), 0.0);
        assert!(f.derivative(2).is_err());
        let (lo, hi) = f.abs_max_enclosure(1e-13);
        assert!(lo <= 4.0 && hi >= 4.0 && hi - lo < 1e-12);
    }

    #[test]
    fn box_convolution_of_square_wave_is_triangle() {
        let e1 = PiecewisePoly::square_wave(1).box_convolve(0.5);
        assert!((e1.eval(0.0) - 1.0).abs() < 1e-14);
        assert!(e1.eval(0.25).abs() < 1e-14);
        assert!((e1.eval(0.5) + 1.0).abs() < 1e-14);
        assert!((e1.eval(0.125) - 0.5).abs() < 1e-14);
        assert_eq!(e1.continuity, 0);
    }

    #[test]
    fn shift_wraps() {
        let f = hat(0.25);
        let g = f.shift(0.3);
        for i in 0..40 {
            let t = i as f64 / 40.0 + 0.0123;
            assert!((g.eval(t) - f.eval(t + 0.3)).abs() < 1e-13);
        }
    }

    #[test]
    fn sum_and_mean() {
        let f = hat(0.25);
        let s = PiecewisePoly::square_wave(2);
        let g = f.linear_combination(2.0, &s, -1.0);
        for i in 0..97 {
            let t = i as f64 / 97.0;
            assert!((g.eval(t) - (2.0 * f.eval(t) - s.eval(t))).abs() < 1e-12);
        }
        assert!((f.mean() - 1.0).abs() < 1e-14);
        assert!(s.mean().abs() < 1e-15);
    }

    #[test]
    fn antiderivative_is_periodic() {
        let s = PiecewisePoly::square_wave(1);
        let g = s.antiderivative();
        assert!(g.mean().abs() < 1e-15);
        let sing = g.singularities();
        assert!(sing.iter().all(|z| z.jump.abs() < 1e-15));
    }

    #[test]
    fn singularities_of_square_wave() {
        let s = PiecewisePoly::square_wave(1).singularities();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].jump, -2.0);
        assert_eq!(s[1].jump, 2.0);
    }
}
