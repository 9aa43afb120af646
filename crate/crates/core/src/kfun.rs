//! Upper estimates of `K₂(f,h) = inf_g ‖f−g‖ + h²‖D²g‖` and of the three-term
//! `K̃₂(f,h₁,h₂) = inf ‖f−g₁‖ + h₁‖D(g₁−g₂)‖ + h₂²‖D²g₂‖`, plus the averaged-construction
//! certificates.

use serde::Serialize;

use crate::certified::{CertifiedValue, Method};
use crate::error::{Error, Result};
use crate::function::{Exact, PeriodicFunction};
use crate::lp::EpigraphLp;
use crate::minimax::{residual_peaks, sample_points, trig_derivative_row, trig_from_coeffs, Target};
use crate::piecewise::Side;
use crate::smoothing::{construct_exact, Construction};
use crate::trig::TrigPoly;

pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_ROUNDS: usize = 30;
/// Relative change under degree doubling accepted as converged.
pub const CONVERGENCE_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct KFunEstimate {
    /// Enclosure of the certificate's objective; `value.hi` bounds the infimum from above.
    pub value: CertifiedValue,
    /// The admissible function(s) realizing `value`.
    pub certificate: Vec<PeriodicFunction>,
    /// Trigonometric degree of the search space (0 for the averaged constructions).
    pub degree: usize,
    pub converged: bool,
    /// Optimum of the discretized problem, a lower bound of the infimum over degree `degree`.
    pub discrete_optimum: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub degree: Option<usize>,
    pub tol: f64,
    /// Re-solve at twice the degree to set `converged`.
    pub check_convergence: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            degree: None,
            tol: DEFAULT_TOL,
            check_convergence: true,
        }
    }
}

/// Cap of the default search degree; beyond it the dense dual simplex loses accuracy
/// faster than the estimate improves.
pub const MAX_DEFAULT_DEGREE: usize = 32;

/// `4·deg + 8` for trigonometric polynomials, 32 otherwise (at most [`MAX_DEFAULT_DEGREE`]).
pub fn default_degree(f: &PeriodicFunction) -> usize {
    match f.exact() {
        Some(Exact { trig, pw: None }) => (4 * trig.degree() + 8).min(MAX_DEFAULT_DEGREE),
        _ => MAX_DEFAULT_DEGREE,
    }
}

struct Term<'a> {
    weight: f64,
    against_f: bool,
    row: Box<dyn Fn(f64) -> Vec<f64> + 'a>,
    poly: Box<dyn Fn(&[f64]) -> TrigPoly + 'a>,
}

struct Fit {
    coeffs: Vec<f64>,
    lp_value: f64,
    value: CertifiedValue,
}

/// Exchange loop for `min_c Σ w_b ‖r_b‖`: solve on a grid, add peaks of the continuous
/// residuals, stop when the certified objective is within `tol` of the discrete optimum.
fn solve_composite(target: &Target, p: usize, terms: &[Term], degree: usize, tol: f64) -> Result<Fit> {
    let jumps = target.jumps();
    let m0 = (2 * (2 * degree + 1)).max(64);
    let grid: Vec<f64> = (0..m0).map(|i| i as f64 / m0 as f64).collect();
    let row_of = |term: &Term, t: f64, side: Side| -> Result<(f64, Vec<f64>)> {
        let y = if term.against_f { target.eval(t, side)? } else { 0.0 };
        Ok((y, (term.row)(t)))
    };
    let mut initial = Vec::new();
    for (b, term) in terms.iter().enumerate() {
        let pts = if term.against_f {
            sample_points(&grid, &jumps)
        } else {
            grid.iter().map(|&s| (s, Side::Right)).collect()
        };
        for (t, side) in pts {
            let (y, row) = row_of(term, t, side)?;
            initial.push((b, y, row));
        }
    }
    let mut magnitude = vec![0.0f64; p];
    for (_, _, row) in &initial {
        for (m, x) in magnitude.iter_mut().zip(row) {
            *m = m.max(x.abs());
        }
    }
    let weights: Vec<f64> = terms.iter().map(|t| t.weight).collect();
    let mut lp = EpigraphLp::new(p, &weights, &magnitude)?;
    for (b, y, row) in initial {
        lp.add_row(b, y, row)?;
    }
    let mut best: Option<Fit> = None;
    let mut lp_value = 0.0f64;
    for round in 0..=MAX_ROUNDS {
        let sol = lp.solve()?;
        lp_value = lp_value.max(sol.value);
        let mut value = CertifiedValue::exact(0.0).with_method(Method::Solver);
        let mut polys = Vec::with_capacity(terms.len());
        for term in terms {
            let q = (term.poly)(&sol.coeffs);
            let norm = if term.against_f {
                target.distance(&q, tol / 4.0)?
            } else {
                Exact::from_trig(q.clone()).sup_norm(tol / 4.0)?
            };
            value = value.add(&norm.scale(term.weight)).with_method(Method::Solver);
            polys.push(q);
        }
        if best.as_ref().map_or(true, |b| value.hi < b.value.hi) {
            best = Some(Fit {
                coeffs: sol.coeffs.clone(),
                lp_value,
                value,
            });
        }
        let b = best.as_mut().unwrap();
        b.lp_value = lp_value;
        if b.value.hi - lp_value <= tol * lp_value.max(1.0) || round == MAX_ROUNDS {
            break;
        }
        for (b, (term, q)) in terms.iter().zip(&polys).enumerate() {
            let r = |t: f64, side: Side| {
                let base = if term.against_f { target.eval(t, side).unwrap_or(0.0) } else { 0.0 };
                base - q.eval(t)
            };
            let js: &[f64] = if term.against_f { &jumps } else { &[] };
            let mut peaks = residual_peaks(&r, js, 8 * m0);
            peaks.retain(|pk| pk.2 > sol.block_errors[b]);
            peaks.sort_by(|a, b| b.2.total_cmp(&a.2));
            peaks.truncate(2 * degree + 16);
            for (t, side, _) in peaks {
                let (y, row) = row_of(term, t, side)?;
                lp.add_row(b, y, row)?;
            }
        }
    }
    Ok(best.unwrap())
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("h = {h} must be > 0")));
    }
    Ok(())
}

fn k2_fit(f: &PeriodicFunction, h: f64, degree: usize, tol: f64) -> Result<(Fit, TrigPoly)> {
    let target = Target::new(f);
    let p = 2 * degree + 1;
    let terms = [
        Term {
            weight: 1.0,
            against_f: true,
            row: Box::new(move |t| trig_derivative_row(t, degree, 0)),
            poly: Box::new(trig_from_coeffs),
        },
        Term {
            weight: h * h,
            against_f: false,
            row: Box::new(move |t| trig_derivative_row(t, degree, 2)),
            poly: Box::new(|c| trig_from_coeffs(c).derivative(2)),
        },
    ];
    let fit = solve_composite(&target, p, &terms, degree, tol)?;
    let g = trig_from_coeffs(&fit.coeffs);
    Ok((fit, g))
}

pub fn k2_estimate_with(f: &PeriodicFunction, h: f64, opts: &Options) -> Result<KFunEstimate> {
    check_h(h)?;
    let degree = opts.degree.unwrap_or_else(|| default_degree(f));
    let (fit, g) = k2_fit(f, h, degree, opts.tol)?;
    let converged = if opts.check_convergence {
        let (fit2, _) = k2_fit(f, h, 2 * degree.max(1), opts.tol)?;
        (fit.value.hi - fit2.value.hi).abs() <= CONVERGENCE_RTOL * fit.value.hi.max(f64::MIN_POSITIVE)
    } else {
        false
    };
    Ok(KFunEstimate {
        value: fit.value,
        certificate: vec![PeriodicFunction::Trig(g)],
        degree,
        converged,
        discrete_optimum: fit.lp_value,
    })
}

/// `K₂(f,h)` over trigonometric polynomials of degree `degree` (default per [`default_degree`]).
pub fn k2_estimate(f: &PeriodicFunction, h: f64, degree: Option<usize>) -> Result<KFunEstimate> {
    k2_estimate_with(f, h, &Options { degree, ..Options::default() })
}

fn ktilde2_fit(f: &PeriodicFunction, h1: f64, h2: f64, degree: usize, tol: f64) -> Result<(Fit, TrigPoly, TrigPoly)> {
    let target = Target::new(f);
    let q = 2 * degree + 1;
    let split = move |c: &[f64]| (trig_from_coeffs(&c[..q]), trig_from_coeffs(&c[q..]));
    let terms = [
        Term {
            weight: 1.0,
            against_f: true,
            row: Box::new(move |t| {
                let mut r = trig_derivative_row(t, degree, 0);
                r.resize(2 * q, 0.0);
                r
            }),
            poly: Box::new(move |c| split(c).0),
        },
        Term {
            weight: h1,
            against_f: false,
            row: Box::new(move |t| {
                let d = trig_derivative_row(t, degree, 1);
                d.iter().copied().chain(d.iter().map(|x| -x)).collect()
            }),
            poly: Box::new(move |c| {
                let (a, b) = split(c);
                a.sub(&b).derivative(1)
            }),
        },
        Term {
            weight: h2 * h2,
            against_f: false,
            row: Box::new(move |t| {
                let mut r = vec![0.0; q];
                r.extend(trig_derivative_row(t, degree, 2));
                r
            }),
            poly: Box::new(move |c| split(c).1.derivative(2)),
        },
    ];
    let fit = solve_composite(&target, 2 * q, &terms, degree, tol)?;
    let (g1, g2) = split(&fit.coeffs);
    Ok((fit, g1, g2))
}

pub fn ktilde2_estimate_with(f: &PeriodicFunction, h1: f64, h2: f64, opts: &Options) -> Result<KFunEstimate> {
    check_h(h1)?;
    check_h(h2)?;
    let degree = opts.degree.unwrap_or_else(|| default_degree(f));
    let (fit, g1, g2) = ktilde2_fit(f, h1, h2, degree, opts.tol)?;
    let converged = if opts.check_convergence {
        let (fit2, _, _) = ktilde2_fit(f, h1, h2, 2 * degree.max(1), opts.tol)?;
        (fit.value.hi - fit2.value.hi).abs() <= CONVERGENCE_RTOL * fit.value.hi.max(f64::MIN_POSITIVE)
    } else {
        false
    };
    Ok(KFunEstimate {
        value: fit.value,
        certificate: vec![PeriodicFunction::Trig(g1), PeriodicFunction::Trig(g2)],
        degree,
        converged,
        discrete_optimum: fit.lp_value,
    })
}

pub fn ktilde2_estimate(f: &PeriodicFunction, h1: f64, h2: f64, degree: Option<usize>) -> Result<KFunEstimate> {
    ktilde2_estimate_with(f, h1, h2, &Options { degree, ..Options::default() })
}

/// Averaged constructions whose objective bounds a K-functional from above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateVariant {
    /// `g = (12/h²)∫_0^h (f*χ_u²) u² χ_h²(u) du`:
    /// `K₂(f, h/(2√6)) ≤ ‖f−g‖ + (h²/24)‖D²g‖`.
    TauK2,
    /// `K₂(f, h/(4√3)) ≤ ‖f−g₁‖ + ‖g₁−g₂‖ + (h²/48)‖D²g₂‖`.
    G1G2K1,
    /// `K̃₂(f, h/8, h/(4√3)) ≤ ‖f−g₁‖ + (h/8)‖D(g₁−g₂)‖ + (h²/48)‖D²g₂‖`.
    G1G2Tilde,
}

impl std::str::FromStr for CertificateVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau_k2" => Ok(CertificateVariant::TauK2),
            "g1g2_k1" => Ok(CertificateVariant::G1G2K1),
            "g1g2_tilde" => Ok(CertificateVariant::G1G2Tilde),
            _ => Err(Error::InvalidArgument(format!("unknown certificate variant `{s}`"))),
        }
    }
}

/// Objective value of the averaged construction (not an optimum).
pub fn k2_construction_certificate(
    f: &PeriodicFunction,
    h: f64,
    variant: CertificateVariant,
    tol: f64,
) -> Result<KFunEstimate> {
    check_h(h)?;
    let e = f
        .exact()
        .ok_or_else(|| Error::Unsupported("construction certificates need an exact function".into()))?;
    let norm = |x: &Exact| x.sup_norm(tol / 4.0);
    let (value, certificate) = match variant {
        CertificateVariant::TauK2 => {
            let g = construct_exact(&e, Construction::Tau, h)?;
            let v = norm(&e.sub(&g))?.add(&norm(&g.derivative(2)?)?.scale(h * h / 24.0));
            (v, vec![g.into_function()])
        }
        CertificateVariant::G1G2K1 | CertificateVariant::G1G2Tilde => {
            let g1 = construct_exact(&e, Construction::G1, h)?;
            let g2 = construct_exact(&e, Construction::G2, h)?;
            let d2 = norm(&g2.derivative(2)?)?.scale(h * h / 48.0);
            let middle = if variant == CertificateVariant::G1G2K1 {
                norm(&g1.sub(&g2))?
            } else {
                norm(&g1.sub(&g2).derivative(1)?)?.scale(h / 8.0)
            };
            let v = norm(&e.sub(&g1))?.add(&middle).add(&d2);
            (v, vec![g1.into_function(), g2.into_function()])
        }
    };
    Ok(KFunEstimate {
        value,
        certificate,
        degree: 0,
        converged: true,
        discrete_optimum: value.lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli;
    use std::f64::consts::PI;

    fn cos(n: usize) -> PeriodicFunction {
        PeriodicFunction::Trig(TrigPoly::cosine(n))
    }

    #[test]
    fn cosine_degree_one_closed_form() {
        // K₂(cos 2πt, h) = min over g = a·cos of |1−a| + h²(2π)²|a| = min(1, 4π²h²)
        for h in [0.05, 0.1, 0.3] {
            // degree 1: K = min(1, 4π²h²); higher harmonics can only lower it
            let k1 = k2_estimate_with(&cos(1), h, &Options { degree: Some(1), ..Options::default() }).unwrap();
            let exact = f64::min(1.0, 4.0 * PI * PI * h * h);
            assert!((k1.value.mid() - exact).abs() < 1e-8, "{h} {:?}", k1.value);
            let k = k2_estimate(&cos(1), h, Some(6)).unwrap();
            assert!(k.value.hi <= exact + 1e-8 && k.value.lo > 0.5 * exact, "{h} {:?}", k.value);
        }
    }

    #[test]
    fn trivial_certificates() {
        let f = PeriodicFunction::Trig(TrigPoly::new(0.2, vec![0.5, -0.3], vec![0.1, 0.7]));
        let h = 0.07;
        let d2 = Exact::from_trig(TrigPoly::new(0.2, vec![0.5, -0.3], vec![0.1, 0.7]).derivative(2))
            .sup_norm(1e-10)
            .unwrap();
        let k = k2_estimate(&f, h, None).unwrap();
        assert!(k.value.hi <= h * h * d2.hi + 1e-9);
        assert_eq!(k.degree, 16);
        let z = k2_estimate(&PeriodicFunction::constant(3.0), 0.2, None).unwrap();
        assert!(z.value.hi < 1e-12);
        for v in [CertificateVariant::TauK2, CertificateVariant::G1G2K1, CertificateVariant::G1G2Tilde] {
            let c = k2_construction_certificate(&PeriodicFunction::constant(1.5), 0.3, v, 1e-10).unwrap();
            assert!(c.value.hi < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn monotone_in_h() {
        let f = PeriodicFunction::SquareWave(1);
        let opts = Options { degree: Some(12), tol: 1e-9, check_convergence: false };
        let hs = [0.02, 0.05, 0.1, 0.2];
        let ks: Vec<_> = hs.iter().map(|&h| k2_estimate_with(&f, h, &opts).unwrap()).collect();
        for w in 0..hs.len() - 1 {
            assert!(ks[w].value.hi <= ks[w + 1].value.hi + 2e-9);
            // K(h)/h² nonincreasing
            let (a, b) = (ks[w].value.hi / hs[w].powi(2), ks[w + 1].value.hi / hs[w + 1].powi(2));
            assert!(b <= a + 2e-9 / hs[w].powi(2));
        }
    }

    #[test]
    fn collapse_and_degree_monotonicity() {
        let f = PeriodicFunction::Trig(TrigPoly::new(0.0, vec![1.0, 0.0, 0.4], vec![0.0, 0.5]));
        let h = 0.1;
        let k = k2_estimate(&f, h, Some(6)).unwrap();
        let kt = ktilde2_estimate(&f, h / 3.0, h, Some(6)).unwrap();
        assert!(kt.value.hi <= k.value.hi + 1e-8);
        let sq = PeriodicFunction::SquareWave(1);
        let opts = |d| Options { degree: Some(d), tol: 1e-9, check_convergence: false };
        let a = k2_estimate_with(&sq, 0.1, &opts(8)).unwrap();
        let b = k2_estimate_with(&sq, 0.1, &opts(16)).unwrap();
        assert!(b.value.hi <= a.value.hi + 1e-8);
        assert!(b.value.hi - b.discrete_optimum <= 1e-8);
    }

    #[test]
    fn construction_bounds() {
        let fs = [cos(1), cos(3), PeriodicFunction::SquareWave(1)];
        for f in &fs {
            for h in [0.5, 0.2] {
                let w1 = moduli::w2_star(f, h, 1, 1e-9).unwrap();
                let w2 = moduli::w2_star(f, h, 2, 1e-9).unwrap();
                let tau = k2_construction_certificate(f, h, CertificateVariant::TauK2, 1e-10).unwrap();
                assert!(tau.value.hi <= 1.5 * w2.hi + 1e-9, "{h} {:?} {:?}", tau.value, w2);
                let g12 = k2_construction_certificate(f, h, CertificateVariant::G1G2K1, 1e-10).unwrap();
                assert!(g12.value.hi <= 2.5 * w1.hi + 1e-9);
                let gt = k2_construction_certificate(f, h, CertificateVariant::G1G2Tilde, 1e-10).unwrap();
                assert!(gt.value.hi <= 2.25 * w1.hi + 1e-9);
            }
        }
    }
}
