//! Convolution with `χ_h^k` and the averaged smoothing constructions `g`, `g₁`, `g₂`.

use std::sync::Arc;

use crate::bspline::{multiplier, BSplineKernel, CompactKernel};
use crate::error::{Error, Result};
use crate::function::{Exact, PeriodicFunction, Sampled};
use crate::piecewise::PiecewisePoly;
use crate::poly;
use crate::quadrature;
use crate::trig::TrigPoly;

/// Absolute tolerance of the u-quadratures behind the constructions.
pub const QUAD_TOL: f64 = 1e-12;

/// `f * χ_h^k`.
pub fn convolve(f: &PeriodicFunction, kernel: &BSplineKernel) -> Result<PeriodicFunction> {
    match f.exact() {
        Some(e) => Ok(convolve_exact(&e, kernel.h, kernel.k).into_function()),
        None => convolve_sampled(f, &kernel.compact(), kernel.k as i32 - 2),
    }
}

/// Exact convolution of the normal form: Fourier multipliers on the trigonometric part,
/// iterated box averages on the piecewise part.
pub fn convolve_exact(e: &Exact, h: f64, k: u32) -> Exact {
    let trig = e.trig.map_multiplier(|j| multiplier(h, k, j));
    let pw = e.pw.as_ref().map(|p| {
        let mut q = p.clone();
        for _ in 0..k {
            q = q.box_convolve(h);
        }
        q
    });
    Exact { trig, pw }
}

/// `f − f * χ_u^k` in exact form.
pub fn deviation_exact(e: &Exact, u: f64, k: u32) -> Exact {
    e.sub(&convolve_exact(e, u, k))
}

/// Exact convolution of a periodic piecewise polynomial with a compactly supported
/// piecewise-polynomial kernel, via repeated periodic antiderivatives:
/// `∫_c^d f(t−y) p(y) dy = Σ_m [G_{m+1}(t−c) p^{(m)}(c) − G_{m+1}(t−d) p^{(m)}(d)] + mean·∫p`.
pub fn convolve_compact(p: &PiecewisePoly, kern: &CompactKernel, kernel_continuity: i32) -> PiecewisePoly {
    let mean = p.mean();
    let max_deg = kern.pieces.iter().map(|q| q.len()).max().unwrap_or(1);
    let mut g = Vec::with_capacity(max_deg);
    let mut cur = p.add_constant(-mean);
    for _ in 0..max_deg {
        cur = cur.antiderivative();
        g.push(cur.clone());
    }
    let mut terms: Vec<(f64, PiecewisePoly)> = Vec::new();
    for (i, q) in kern.pieces.iter().enumerate() {
        let (c, d) = (kern.knots[i], kern.knots[i + 1]);
        let mut dq = q.clone();
        for gm in g.iter().take(q.len()) {
            let at_c = poly::eval(&dq, 0.0);
            let at_d = poly::eval(&dq, d - c);
            if at_c != 0.0 {
                terms.push((at_c, gm.shift(-c)));
            }
            if at_d != 0.0 {
                terms.push((-at_d, gm.shift(-d)));
            }
            dq = poly::derivative(&dq);
        }
    }
    let refs: Vec<(f64, &PiecewisePoly)> = terms.iter().map(|(w, q)| (*w, q)).collect();
    let mut out = if refs.is_empty() {
        PiecewisePoly::constant(0.0)
    } else {
        PiecewisePoly::sum(&refs)
    };
    out = out.add_constant(mean * kern.mass());
    out.continuity = p.continuity.saturating_add(kernel_continuity).saturating_add(2).max(0);
    out
}

/// Quadrature-based convolution of a sampled function; keeps its Lipschitz hint.
fn convolve_sampled(f: &PeriodicFunction, kern: &CompactKernel, kernel_continuity: i32) -> Result<PeriodicFunction> {
    let lipschitz = f.lipschitz_hint();
    let smooth = f.is_smooth() || kernel_continuity >= 0;
    let src = f.clone();
    let kern = kern.clone();
    let name = match f {
        PeriodicFunction::Closure(s) => format!("{}*kernel", s.name),
        _ => "convolution".to_string(),
    };
    // probe once so that sampling failures surface here rather than later
    f.eval(0.0)?;
    Ok(PeriodicFunction::Closure(Sampled {
        name,
        f: Arc::new(move |t| {
            let mut acc = 0.0;
            for (i, q) in kern.pieces.iter().enumerate() {
                let (c, d) = (kern.knots[i], kern.knots[i + 1]);
                let g = |y: f64| src.eval(t - y).unwrap_or(f64::NAN) * poly::eval(q, y - c);
                acc += quadrature::adaptive(&g, c, d, &[], 1e-11)
                    .map(|v| v.mid())
                    .unwrap_or(f64::NAN);
            }
            acc
        }),
        lipschitz,
        smooth,
    }))
}

/// The three averaged constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// `(12/h²) ∫_0^h (f*χ_u²) u² χ_h²(u) du`
    Tau,
    /// `(24/h²) ∫_0^{h/2} (f*χ_u) u² χ_h(u) du`
    G1,
    /// `(24/h²) ∫_0^{h/2} (f*χ_u²) u² χ_h(u) du`
    G2,
}

impl Construction {
    fn order(self) -> u32 {
        match self {
            Construction::G1 => 1,
            _ => 2,
        }
    }

    fn range(self, h: f64) -> f64 {
        match self {
            Construction::Tau => h,
            _ => h / 2.0,
        }
    }

    /// Probability weight on `[0, range]`.
    fn weight(self, h: f64, u: f64) -> f64 {
        match self {
            Construction::Tau => 12.0 / (h * h) * u * u * (1.0 - u / h) / h,
            _ => 24.0 / (h * h * h) * u * u,
        }
    }

    /// The averaged kernel `∫ w(u) χ_u^k(y) du` as an exact compact kernel.
    pub fn kernel(self, h: f64) -> CompactKernel {
        let h3 = h * h * h;
        match self {
            // 2(h−|y|)³/h⁴
            Construction::Tau => {
                let h4 = h3 * h;
                CompactKernel {
                    knots: vec![-h, 0.0, h],
                    // left piece in y + h: 2 s³/h⁴; right piece in y: 2(h−y)³/h⁴
                    pieces: vec![
                        vec![0.0, 0.0, 0.0, 2.0 / h4],
                        vec![2.0 * h3 / h4, -6.0 * h * h / h4, 6.0 * h / h4, -2.0 / h4],
                    ],
                }
            }
            // (12/h³)(h²/4 − 4y²) on |y| ≤ h/4
            Construction::G1 => {
                let a = h / 4.0;
                let q = poly::taylor_shift(&[12.0 / h3 * h * h / 4.0, 0.0, -48.0 / h3], -a);
                CompactKernel {
                    knots: vec![-a, a],
                    pieces: vec![q],
                }
            }
            // (12/h³)(h/2 − |y|)² on |y| ≤ h/2
            Construction::G2 => {
                let b = h / 2.0;
                CompactKernel {
                    knots: vec![-b, 0.0, b],
                    pieces: vec![
                        vec![0.0, 0.0, 12.0 / h3],
                        vec![12.0 / h3 * b * b, -24.0 / h3 * b, 12.0 / h3],
                    ],
                }
            }
        }
    }

    fn kernel_continuity(self) -> i32 {
        match self {
            Construction::Tau => 0,
            // the parabola meets zero with a kink at ±h/4
            Construction::G1 => 0,
            Construction::G2 => 0,
        }
    }

    /// Fourier multipliers `∫ w(u) sinc(πju)^k du`, `j = 0..=m`, by adaptive Gauss–Legendre.
    pub fn multipliers(self, h: f64, m: usize) -> Result<Vec<f64>> {
        let k = self.order();
        let integrand = |u: f64| -> Vec<f64> {
            let w = self.weight(h, u);
            (0..=m).map(|j| w * multiplier(u, k, j)).collect()
        };
        let (v, _) = quadrature::adaptive_vec(&integrand, 0.0, self.range(h), &[], m + 1, QUAD_TOL)?;
        Ok(v)
    }
}

/// Apply a construction to the exact normal form.
pub fn construct_exact(e: &Exact, c: Construction, h: f64) -> Result<Exact> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h = {h} must be > 0")));
    }
    let mult = c.multipliers(h, e.trig.len())?;
    let trig = e.trig.map_multiplier(|j| mult[j]);
    let pw = e
        .pw
        .as_ref()
        .map(|p| convolve_compact(p, &c.kernel(h), c.kernel_continuity()));
    Ok(Exact { trig, pw })
}

fn construct(f: &PeriodicFunction, c: Construction, h: f64) -> Result<PeriodicFunction> {
    match f.exact() {
        Some(e) => Ok(construct_exact(&e, c, h)?.into_function()),
        None => convolve_sampled(f, &c.kernel(h), c.kernel_continuity()),
    }
}

/// The construction `g` with `D²g = −(12/h²)(f − f*χ_h²)`.
pub fn construction_g(f: &PeriodicFunction, h: f64) -> Result<PeriodicFunction> {
    construct(f, Construction::Tau, h)
}

/// The pair `(g₁, g₂)`.
pub fn construction_g1_g2(f: &PeriodicFunction, h: f64) -> Result<(PeriodicFunction, PeriodicFunction)> {
    Ok((construct(f, Construction::G1, h)?, construct(f, Construction::G2, h)?))
}

/// Trigonometric part only; convenience for tests and smooth inputs.
pub fn construct_trig(p: &TrigPoly, c: Construction, h: f64) -> Result<TrigPoly> {
    Ok(construct_exact(&Exact::from_trig(p.clone()), c, h)?.trig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::DEFAULT_TOL;
    use std::f64::consts::PI;

    fn cos1() -> PeriodicFunction {
        PeriodicFunction::Trig(TrigPoly::cosine(1))
    }

    #[test]
    fn convolve_cosine_by_multiplier() {
        for (h, k) in [(0.3, 1), (0.25, 2), (0.7, 3)] {
            let kern = BSplineKernel::new(h, k).unwrap();
            let g = convolve(&cos1(), &kern).unwrap();
            let m = (PI * h).sin() / (PI * h);
            for i in 0..50 {
                let t = i as f64 / 50.0;
                // oracle: direct quadrature of ∫ cos(2π(t−y)) χ(y) dy over the kernel pieces
                let c = kern.compact();
                let q: f64 = (0..c.pieces.len())
                    .map(|p| {
                        quadrature::gauss_legendre(
                            &|y| (2.0 * PI * (t - y)).cos() * c.eval(y),
                            c.knots[p],
                            c.knots[p + 1],
                            20,
                        )
                    })
                    .sum();
                let v = g.eval(t).unwrap();
                assert!((v - m.powi(k as i32) * (2.0 * PI * t).cos()).abs() < 1e-14);
                assert!((v - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constants_are_preserved() {
        let c = PeriodicFunction::constant(1.5);
        let kern = BSplineKernel::new(0.4, 3).unwrap();
        assert!((convolve(&c, &kern).unwrap().eval(0.2).unwrap() - 1.5).abs() < 1e-15);
        let g = construction_g(&c, 0.25).unwrap();
        assert!((g.eval(0.3).unwrap() - 1.5).abs() < 1e-12);
        let (g1, g2) = construction_g1_g2(&c, 0.25).unwrap();
        assert!((g1.eval(0.1).unwrap() - 1.5).abs() < 1e-12);
        assert!((g2.eval(0.9).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn square_wave_box_average_is_triangle() {
        let kern = BSplineKernel::new(0.5, 1).unwrap();
        let e1 = convolve(&PeriodicFunction::SquareWave(1), &kern).unwrap();
        for i in 0..40 {
            let t = i as f64 / 40.0;
            let tri = 1.0 - 4.0 * (t - (t + 0.5).floor()).abs();
            assert!((e1.eval(t).unwrap() - tri).abs() < 1e-14, "{t}");
        }
    }

    #[test]
    fn compact_kernels_have_unit_mass_and_match_multipliers() {
        let h = 0.3;
        for c in [Construction::Tau, Construction::G1, Construction::G2] {
            let k = c.kernel(h);
            assert!((k.mass() - 1.0).abs() < 1e-13, "{c:?}");
            let m = c.multipliers(h, 5).unwrap();
            for (j, mj) in m.iter().enumerate() {
                let direct: f64 = (0..k.pieces.len())
                    .map(|p| {
                        quadrature::gauss_legendre(
                            &|y| (2.0 * PI * j as f64 * y).cos() * k.eval(y),
                            k.knots[p],
                            k.knots[p + 1],
                            20,
                        )
                    })
                    .sum();
                assert!((mj - direct).abs() < 1e-11, "{c:?} j={j}");
            }
        }
    }

    #[test]
    fn compact_convolution_matches_multiplier_path() {
        // a square wave has both representations: exact piecewise and (via the kernel) trig
        let h = 0.2;
        let sq = PiecewisePoly::square_wave(1);
        for c in [Construction::Tau, Construction::G1, Construction::G2] {
            let g = convolve_compact(&sq, &c.kernel(h), 0);
            let kern = c.kernel(h);
            for i in 0..30 {
                let t = i as f64 / 30.0 + 0.01;
                let direct: f64 = (0..kern.pieces.len())
                    .map(|p| {
                        let (a, b) = (kern.knots[p], kern.knots[p + 1]);
                        let mut pts = vec![a, b];
                        for z in [t - 0.25, t - 0.75, t + 0.25, t - 1.25, t + 0.75] {
                            if z > a && z < b {
                                pts.push(z);
                            }
                        }
                        pts.sort_by(f64::total_cmp);
                        pts.windows(2)
                            .map(|w| quadrature::gauss_legendre(&|y| sq.eval(t - y) * kern.eval(y), w[0], w[1], 20))
                            .sum::<f64>()
                    })
                    .sum();
                assert!((g.eval(t) - direct).abs() < 1e-12, "{c:?} t={t}");
            }
        }
    }

    #[test]
    fn tau_identity_for_cosine() {
        // D²g = −(12/h²)(f − f*χ_h²)
        let h = 0.25;
        let f = cos1();
        let g = construction_g(&f, h).unwrap();
        let d2 = g.derivative(2).unwrap();
        let dev = f.sub(&convolve(&f, &BSplineKernel::new(h, 2).unwrap()).unwrap());
        let resid = d2.add(&dev.scale(12.0 / (h * h)));
        assert!(resid.sup_norm(DEFAULT_TOL).unwrap().hi < 1e-9);
    }

    #[test]
    fn tau_identity_for_piecewise() {
        let h = 0.25;
        let f = PeriodicFunction::SquareWave(2);
        let g = construction_g(&f, h).unwrap();
        let d2 = g.derivative(2).unwrap();
        let dev = f.sub(&convolve(&f, &BSplineKernel::new(h, 2).unwrap()).unwrap());
        let resid = d2.add(&dev.scale(12.0 / (h * h)));
        assert!(resid.sup_norm(DEFAULT_TOL).unwrap().hi < 1e-9);
    }

    #[test]
    fn sampled_convolution() {
        let f = PeriodicFunction::closure("c", |t| (2.0 * PI * t).cos(), Some(2.0 * PI), true);
        let kern = BSplineKernel::new(0.5, 1).unwrap();
        let g = convolve(&f, &kern).unwrap();
        assert!((g.eval(0.0).unwrap() - 2.0 / PI).abs() < 1e-10);
    }
}
