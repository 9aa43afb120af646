//! Layers `ε_j = sign cos(2πnt) * χ_h^j` (`h = 1/(2n)`) and partial sums of `φ = Σ ε_j`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};
use crate::function::PeriodicFunction;
use crate::piecewise::PiecewisePoly;

/// Layer bound ratio `2/π`.
pub const RATIO: f64 = 2.0 / PI;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiPartialSum {
    pub n: usize,
    pub m: usize,
    pub function: PiecewisePoly,
    /// `Σ_{j>m} (2/π)^{j−1}`
    pub tail_bound: f64,
}

impl PhiPartialSum {
    pub fn h(&self) -> f64 {
        0.5 / self.n as f64
    }

    pub fn as_function(&self) -> PeriodicFunction {
        PeriodicFunction::Piecewise(self.function.clone())
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("frequency n must be ≥ 1".into()));
    }
    Ok(())
}

/// All layers `ε_0..=ε_m` as piecewise polynomials, by iterated exact box averaging.
pub fn layers(n: usize, m: usize) -> Result<Vec<PiecewisePoly>> {
    check_n(n)?;
    let h = 0.5 / n as f64;
    let mut out = Vec::with_capacity(m + 1);
    let mut cur = PiecewisePoly::square_wave(n);
    out.push(cur.clone());
    for _ in 0..m {
        cur = cur.box_convolve(h);
        out.push(cur.clone());
    }
    Ok(out)
}

/// `ε_j`; the square wave itself for `j = 0`.
pub fn epsilon_j(n: usize, j: usize) -> Result<PeriodicFunction> {
    check_n(n)?;
    if j == 0 {
        return Ok(PeriodicFunction::SquareWave(n));
    }
    Ok(PeriodicFunction::Piecewise(layers(n, j)?.pop().unwrap()))
}

/// `(2/π)^m / (1 − 2/π)`.
pub fn tail_bound(m: usize) -> f64 {
    RATIO.powi(m as i32) / (1.0 - RATIO)
}

pub fn phi_partial(n: usize, m: usize) -> Result<PhiPartialSum> {
    let ls = layers(n, m)?;
    let refs: Vec<(f64, &PiecewisePoly)> = ls.iter().map(|p| (1.0, p)).collect();
    let mut function = PiecewisePoly::sum(&refs);
    function.continuity = -1;
    Ok(PhiPartialSum {
        n,
        m,
        function,
        tail_bound: tail_bound(m),
    })
}

/// Exact `‖ε_j‖` (per-piece polynomial maxima).
pub fn layer_norm(layer: &PiecewisePoly, tol: f64) -> CertifiedValue {
    let (lo, hi) = layer.abs_max_enclosure(tol);
    CertifiedValue::new(lo, hi, crate::certified::Method::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli;

    #[test]
    fn first_layers() {
        let e0 = epsilon_j(1, 0).unwrap();
        assert!(e0.sup_norm(1e-12).unwrap().contains(1.0));
        let e1 = epsilon_j(1, 1).unwrap();
        let v = e1.sup_norm(1e-12).unwrap();
        assert!(v.contains(1.0) || (v.hi - 1.0).abs() < 1e-14);
        let e3 = epsilon_j(2, 3).unwrap().sup_norm(1e-12).unwrap();
        assert!(e3.hi <= RATIO * RATIO);
    }

    #[test]
    fn telescoping_and_partial_sum() {
        let ls = layers(2, 6).unwrap();
        for j in 0..6 {
            let next = ls[j].box_convolve(0.25);
            for i in 0..100 {
                let t = i as f64 / 100.0 + 0.003;
                assert!((next.eval(t) - ls[j + 1].eval(t)).abs() <= 1e-12);
            }
        }
        let phi = phi_partial(2, 6).unwrap();
        for i in 0..100 {
            let t = i as f64 / 100.0 + 0.001;
            let direct: f64 = ls.iter().map(|l| l.eval(t)).sum();
            assert!((phi.function.eval(t) - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn tail_bounds() {
        assert!((tail_bound(0) - 1.0 / (1.0 - RATIO)).abs() < 1e-15);
        assert!((tail_bound(0) - 2.7519).abs() < 1e-4);
        // (2/π)^40/(1−2/π) ≈ 3.9e−8
        assert!((tail_bound(40) - 3.94e-8).abs() < 0.01e-8);
    }

    #[test]
    fn layer_bounds_up_to_twenty() {
        let ls = layers(1, 20).unwrap();
        for (j, l) in ls.iter().enumerate().skip(1) {
            let v = layer_norm(l, 1e-13);
            assert!(v.hi <= RATIO.powi(j as i32 - 1) + 1e-12, "j={j} {v:?}");
        }
    }

    #[test]
    fn sharpness_values() {
        let phi = phi_partial(1, 40).unwrap();
        let f = phi.as_function();
        let w1 = moduli::w2(&f, 0.5, 1, 1e-10).unwrap();
        let w2 = moduli::w2(&f, 0.5, 2, 1e-10).unwrap();
        assert!((w1.mid() - 1.0).abs() <= 2.0 * phi.tail_bound, "{w1:?}");
        assert!((w2.mid() - 2.0).abs() <= 2.0 * phi.tail_bound, "{w2:?}");
    }
}
