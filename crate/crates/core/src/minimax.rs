//! Best uniform approximation by trigonometric polynomials of degree `< n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::certified::{CertifiedValue, Method};
use crate::error::{Error, Result};
use crate::function::{Exact, PeriodicFunction};
use crate::lp::{self, Block, EpigraphLp, Row};
use crate::piecewise::{norm01, Side};
use crate::trig::TrigPoly;
use crate::verify::report::{CheckReport, Params, DEFAULT_ABS_TOL};

pub const DEFAULT_TOL: f64 = 1e-8;
/// Extremal-point migration rounds after the initial solve.
pub const MAX_ROUNDS: usize = 8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimaxSolution {
    pub approximant: TrigPoly,
    /// Enclosure of `E_{n−1}(f)`.
    pub error: CertifiedValue,
    /// `(t, sign of f − τ)` at the active grid points.
    pub extremal_points: Vec<(f64, f64)>,
    pub iterations: usize,
}

/// `1, cos 2πt, sin 2πt, …, cos 2πNt, sin 2πNt` at `t`.
pub fn trig_basis_row(t: f64, degree: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(2 * degree + 1);
    row.push(1.0);
    for j in 1..=degree {
        let (s, c) = (2.0 * PI * j as f64 * t).sin_cos();
        row.push(c);
        row.push(s);
    }
    row
}

/// Row of the `r`-th derivative of the trigonometric basis.
pub fn trig_derivative_row(t: f64, degree: usize, r: u32) -> Vec<f64> {
    let mut row = Vec::with_capacity(2 * degree + 1);
    row.push(if r == 0 { 1.0 } else { 0.0 });
    for j in 1..=degree {
        let w = 2.0 * PI * j as f64;
        let (s, c) = (w * t).sin_cos();
        let f = w.powi(r as i32);
        let (dc, ds) = match r % 4 {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        };
        row.push(f * dc);
        row.push(f * ds);
    }
    row
}

pub fn trig_from_coeffs(c: &[f64]) -> TrigPoly {
    let n = (c.len() - 1) / 2;
    let cos = (0..n).map(|j| c[1 + 2 * j]).collect();
    let sin = (0..n).map(|j| c[2 + 2 * j]).collect();
    TrigPoly::new(c[0], cos, sin)
}

/// `max(64n, 512)` uniform points.
pub fn default_grid(n: usize) -> Vec<f64> {
    let m = (64 * n).max(512);
    (0..m).map(|i| i as f64 / m as f64).collect()
}

/// A function sampled with one-sided limits.
pub(crate) enum Target {
    Exact(Exact),
    General(PeriodicFunction),
}

impl Target {
    pub(crate) fn new(f: &PeriodicFunction) -> Self {
        match f.exact() {
            Some(e) => Target::Exact(e),
            None => Target::General(f.clone()),
        }
    }

    pub(crate) fn eval(&self, t: f64, side: Side) -> Result<f64> {
        match self {
            Target::Exact(e) => Ok(e.eval_side(t, side)),
            Target::General(f) => f.eval(t),
        }
    }

    pub(crate) fn jumps(&self) -> Vec<f64> {
        match self {
            Target::Exact(e) => e
                .singularities()
                .into_iter()
                .filter(|s| s.jump != 0.0)
                .map(|s| norm01(s.t))
                .collect(),
            Target::General(_) => Vec::new(),
        }
    }

    /// `‖self − p‖`
    pub(crate) fn distance(&self, p: &TrigPoly, tol: f64) -> Result<CertifiedValue> {
        match self {
            Target::Exact(e) => e.sub(&Exact::from_trig(p.clone())).sup_norm(tol),
            Target::General(f) => f.sub(&PeriodicFunction::Trig(p.clone())).sup_norm(tol),
        }
    }
}

/// Sample points: a uniform grid with both one-sided limits at each jump.
pub(crate) fn sample_points(grid: &[f64], jumps: &[f64]) -> Vec<(f64, Side)> {
    let near = |t: f64| jumps.iter().any(|&j| (t - j).abs() < 1e-12 || (t - j).abs() > 1.0 - 1e-12);
    let mut pts: Vec<(f64, Side)> = grid
        .iter()
        .filter(|&&t| !near(t))
        .map(|&t| (t, Side::Right))
        .collect();
    for &j in jumps {
        pts.push((j, Side::Left));
        pts.push((j, Side::Right));
    }
    pts
}

/// Local maxima of `|r|` from dense samples, refined by golden section away from jumps.
pub(crate) fn residual_peaks(
    r: &dyn Fn(f64, Side) -> f64,
    jumps: &[f64],
    samples: usize,
) -> Vec<(f64, Side, f64)> {
    let ts: Vec<f64> = (0..samples).map(|i| i as f64 / samples as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| r(t, Side::Right).abs()).collect();
    let mut out = Vec::new();
    let crosses_jump = |a: f64, b: f64| jumps.iter().any(|&j| {
        let j = if j < a { j + 1.0 } else { j };
        j >= a && j <= b
    });
    for i in 0..samples {
        let (ip, inx) = ((i + samples - 1) % samples, (i + 1) % samples);
        if vs[i] >= vs[ip] && vs[i] >= vs[inx] && vs[i] > 0.0 {
            let a = ts[i] - 1.0 / samples as f64;
            let b = ts[i] + 1.0 / samples as f64;
            if crosses_jump(norm01(a), norm01(a) + (b - a)) {
                out.push((ts[i], Side::Right, vs[i]));
            } else {
                let t = golden_max(&|t| r(norm01(t), Side::Right).abs(), a, b);
                out.push((norm01(t), Side::Right, r(norm01(t), Side::Right).abs()));
            }
        }
    }
    for &j in jumps {
        for side in [Side::Left, Side::Right] {
            out.push((j, side, r(j, side).abs()));
        }
    }
    out
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if b - a < 1e-15 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    0.5 * (a + b)
}

/// `E_{n−1}(f)` with the minimizing polynomial.
///
/// The lower end of the enclosure is the optimum of the discretized problem (the grid only
/// grows across migration rounds), the upper end the certified residual norm.
pub fn best_approx(f: &PeriodicFunction, n: usize, tol: f64) -> Result<MinimaxSolution> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be ≥ 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be > 0")));
    }
    let target = Target::new(f);
    let jumps = target.jumps();
    let deg = n - 1;
    let pts = sample_points(&default_grid(n), &jumps);
    let mut lp = EpigraphLp::new(2 * deg + 1, &[1.0], &vec![1.0; 2 * deg + 1])?;
    let add = |lp: &mut EpigraphLp, t: f64, side: Side| -> Result<f64> {
        let y = target.eval(t, side)?;
        lp.add_row(0, y, trig_basis_row(t, deg))?;
        Ok(y.abs())
    };
    let mut scale = 0.0f64;
    for &(t, side) in &pts {
        scale = scale.max(add(&mut lp, t, side)?);
    }
    let mut active: Vec<(f64, Side)> = pts;
    let mut lo = 0.0f64;
    let mut best: Option<(f64, TrigPoly)> = None;
    let mut iterations = 0;
    for round in 0..=MAX_ROUNDS {
        let sol = lp.solve()?;
        iterations += sol.iterations;
        lo = lo.max(sol.value - 1e-13 * scale.max(1.0)).max(0.0);
        let tau = trig_from_coeffs(&sol.coeffs);
        let dist = target.distance(&tau, tol / 4.0)?;
        if best.as_ref().map_or(true, |(h, _)| dist.hi < *h) {
            best = Some((dist.hi, tau.clone()));
        }
        let hi = best.as_ref().unwrap().0.max(lo);
        if hi - lo <= tol || round == MAX_ROUNDS {
            let (_, approximant) = best.unwrap();
            let error = CertifiedValue::new(lo, hi, Method::Solver);
            if hi - lo > tol {
                return Err(Error::ToleranceNotMet { best: error, requested: tol });
            }
            let r = |t: f64, side: Side| target.eval(t, side).unwrap_or(0.0) - approximant.eval(t);
            let level = 0.5 * (lo + hi) - tol.max(1e-9 * hi);
            let mut extremal_points: Vec<(f64, f64)> = active
                .iter()
                .filter_map(|&(t, side)| {
                    let v = r(t, side);
                    (v.abs() >= level && hi > 0.0).then_some((t, v.signum()))
                })
                .collect();
            extremal_points.sort_by(|a, b| a.0.total_cmp(&b.0));
            extremal_points.dedup_by(|a, b| a.1 == b.1 && (a.0 - b.0).abs() < 1e-3 / n as f64);
            return Ok(MinimaxSolution {
                approximant,
                error,
                extremal_points,
                iterations,
            });
        }
        // migration: add the residual peaks that violate the discrete optimum
        let r = |t: f64, side: Side| target.eval(t, side).unwrap_or(0.0) - tau.eval(t);
        let mut peaks = residual_peaks(&r, &jumps, 8 * active.len().max(512));
        peaks.retain(|p| p.2 > sol.value);
        peaks.sort_by(|a, b| b.2.total_cmp(&a.2));
        peaks.truncate(4 * n + 16);
        for (t, side, _) in peaks {
            scale = scale.max(add(&mut lp, t, side)?);
            active.push((t, side));
        }
    }
    unreachable!()
}

/// Enclosure of `E_{n−1}(f)`; a missed tolerance still yields its valid enclosure.
pub fn best_approx_error(f: &PeriodicFunction, n: usize, tol: f64) -> Result<CertifiedValue> {
    match best_approx(f, n, tol) {
        Ok(s) => Ok(s.error),
        Err(Error::ToleranceNotMet { best, .. }) => Ok(best),
        Err(e) => Err(e),
    }
}

/// One weighted term `w · max_grid |target − Σ c_i basis_i|` of a composite objective.
pub struct Term<'a> {
    pub weight: f64,
    pub target: Box<dyn Fn(f64) -> f64 + 'a>,
    pub basis: Vec<Box<dyn Fn(f64) -> f64 + 'a>>,
}

/// `min_c Σ_b w_b max_{t∈grid} |target_b(t) − Σ_i c_i basis_{b,i}(t)|`; all terms share the
/// coefficient vector.
pub struct LinearMinimaxProblem<'a> {
    pub grid: Vec<f64>,
    pub terms: Vec<Term<'a>>,
}

pub fn solve_minimax(problem: &LinearMinimaxProblem) -> Result<(Vec<f64>, CertifiedValue)> {
    let g = &problem.grid;
    if g.is_empty() || g.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("grid must be nonempty, sorted and distinct".into()));
    }
    let p = problem.terms.first().map_or(0, |t| t.basis.len());
    if p == 0 || problem.terms.iter().any(|t| t.basis.len() != p) {
        return Err(Error::InvalidArgument("every term needs the same nonempty basis".into()));
    }
    let blocks: Vec<Block> = problem
        .terms
        .iter()
        .map(|term| Block {
            weight: term.weight,
            rows: g
                .iter()
                .map(|&t| Row {
                    t,
                    target: (term.target)(t),
                    coeffs: term.basis.iter().map(|b| b(t)).collect(),
                })
                .collect(),
        })
        .collect();
    let sol = lp::solve_epigraph(p, &blocks)?;
    let recomputed: f64 = blocks.iter().zip(&sol.block_errors).map(|(b, e)| b.weight * e).sum();
    let value = CertifiedValue::new(sol.value.min(recomputed).max(0.0), recomputed.max(sol.value), Method::Solver);
    Ok((sol.coeffs, value))
}

/// `E_{n−1}(g) ≤ ‖D²g‖/(32n²)`.
pub fn favard_check(g: &TrigPoly, n: usize, tol: f64) -> Result<CheckReport> {
    let lhs = best_approx_error(&PeriodicFunction::Trig(g.clone()), n, tol)?;
    let d2 = Exact::from_trig(g.derivative(2)).sup_norm(tol)?;
    let rhs = d2.scale(1.0 / (32.0 * (n * n) as f64));
    let mut params = Params::new();
    params.insert("n".into(), n.into());
    params.insert("degree".into(), g.degree().into());
    let abs_tol = DEFAULT_ABS_TOL.max(tol * rhs.hi);
    Ok(CheckReport::new(
        "FAV",
        "E_{n-1}(g) <= ||D^2 g|| / (32 n^2)",
        params,
        lhs,
        rhs,
        abs_tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::report::Status;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trig(p: TrigPoly) -> PeriodicFunction {
        PeriodicFunction::Trig(p)
    }

    #[test]
    fn basis_rows() {
        let t = 0.137;
        let p = TrigPoly::new(0.5, vec![1.0, -2.0], vec![0.25, 3.0]);
        let c = [0.5, 1.0, 0.25, -2.0, 3.0];
        for r in 0..4 {
            let row = trig_derivative_row(t, 2, r);
            let v = lp::dot(&row, &c);
            assert!((v - p.derivative(r).eval(t)).abs() < 1e-9 * (1.0 + v.abs()), "r={r}");
        }
        assert_eq!(trig_from_coeffs(&c), p);
    }

    #[test]
    fn polynomial_in_class() {
        let s = best_approx(&trig(TrigPoly::cosine(1)), 4, 1e-10).unwrap();
        assert!(s.error.hi < 1e-12, "{:?}", s.error);
        assert!((s.approximant.a(1) - 1.0).abs() < 1e-10);
        let s = best_approx(&PeriodicFunction::constant(3.0), 1, 1e-10).unwrap();
        assert!(s.error.hi < 1e-12 && (s.approximant.constant - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_of_degree_n() {
        for n in [1, 2, 5] {
            let s = best_approx(&trig(TrigPoly::cosine(n)), n, 1e-9).unwrap();
            assert!(s.error.contains(1.0) || (s.error.mid() - 1.0).abs() < 1e-9, "{:?}", s.error);
            assert!(s.approximant.derivative_bound(0) < 1e-8);
            // alternation: 2n points with alternating signs
            assert!(s.extremal_points.len() >= 2 * n);
        }
    }

    #[test]
    fn square_wave_constant_approximation() {
        // best constant to a ±1 square wave: E_0 = 1
        let s = best_approx(&PeriodicFunction::SquareWave(1), 1, 1e-10).unwrap();
        assert!((s.error.lo - 1.0).abs() < 1e-12 && (s.error.hi - 1.0).abs() < 1e-10);
        // sign(cos 2πt) against degree-1 polynomials: E_1 = 1 as well (the jump has size 2)
        let s = best_approx(&PeriodicFunction::SquareWave(1), 2, 1e-8).unwrap();
        assert!((s.error.mid() - 1.0).abs() < 1e-8, "{:?}", s.error);
    }

    #[test]
    fn invariance_and_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = TrigPoly::new(
            0.1,
            (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let n = 3;
        let e = best_approx(&trig(f.clone()), n, 1e-10).unwrap().error;
        let tau = TrigPoly::new(2.0, vec![0.5, -1.0], vec![0.3, 0.0]);
        let e2 = best_approx(&trig(f.add(&tau)), n, 1e-10).unwrap().error;
        assert!((e.mid() - e2.mid()).abs() < 2e-10);
        let e3 = best_approx(&trig(f.scale(-2.5)), n, 1e-10).unwrap().error;
        assert!((e3.mid() - 2.5 * e.mid()).abs() < 3e-10);
        let e4 = best_approx(&trig(f.clone()), n + 1, 1e-10).unwrap().error;
        assert!(e4.mid() <= e.mid() + 1e-10);
        assert!(e.lo <= e.hi);
    }

    #[test]
    fn dense_grid_oracle() {
        // independent oracle: LP on 4096 uniform points without migration
        let f = TrigPoly::new(0.0, vec![0.3, 0.0, 1.0], vec![0.0, -0.7, 0.2]);
        let grid: Vec<f64> = (0..4096).map(|i| i as f64 / 4096.0).collect();
        let rows = grid
            .iter()
            .map(|&t| Row { t, target: f.eval(t), coeffs: trig_basis_row(t, 1) })
            .collect();
        let oracle = lp::solve_epigraph(3, &[Block { weight: 1.0, rows }]).unwrap().value;
        let e = best_approx(&trig(f), 2, 1e-10).unwrap().error;
        assert!(oracle <= e.hi, "{oracle} {e:?}");
        assert!((oracle - e.mid()).abs() < 1e-6);
    }

    #[test]
    fn generic_problem() {
        let problem = LinearMinimaxProblem {
            grid: (0..200).map(|i| i as f64 / 200.0).collect(),
            terms: vec![Term {
                weight: 1.0,
                target: Box::new(|t| (2.0 * PI * t).cos()),
                basis: vec![Box::new(|_| 1.0)],
            }],
        };
        let (c, v) = solve_minimax(&problem).unwrap();
        assert!(c[0].abs() < 1e-12 && (v.mid() - 1.0).abs() < 1e-12);
        let one = LinearMinimaxProblem {
            grid: vec![0.3],
            terms: vec![Term {
                weight: 1.0,
                target: Box::new(|_| 4.0),
                basis: vec![Box::new(|_| 2.0)],
            }],
        };
        let (c, v) = solve_minimax(&one).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && v.hi < 1e-12);
        let bad = LinearMinimaxProblem { grid: vec![0.5, 0.1], terms: vec![] };
        assert!(solve_minimax(&bad).is_err());
    }

    #[test]
    fn favard() {
        for n in [1, 3] {
            let r = favard_check(&TrigPoly::cosine(n), n, 1e-9).unwrap();
            assert_eq!(r.status, Status::Pass);
            assert!((r.rhs.mid() - PI * PI / 8.0).abs() < 1e-8);
            assert!((r.lhs.mid() - 1.0).abs() < 1e-8);
        }
        let r = favard_check(&TrigPoly::constant(2.0), 2, 1e-9).unwrap();
        assert_eq!(r.status, Status::Pass);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = TrigPoly::new(
            0.0,
            (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        assert_eq!(favard_check(&g, 3, 1e-9).unwrap().status, Status::Pass);
    }
}
