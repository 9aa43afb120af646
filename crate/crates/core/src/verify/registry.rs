//! The check registry and the suite runner.
//!
//! Every check is an inequality `Σ aᵢ Qᵢ ≤ Σ bⱼ Qⱼ` between certified quantities (moduli,
//! norms, best-approximation errors, K-functional estimates). Quantities are cached per run;
//! terms occurring on both sides cancel exactly before the enclosures are compared, and the
//! enclosure tolerance is tightened only while the verdict is inconclusive.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certified::{CertifiedValue, Method};
use crate::error::{Error, Result};
use crate::extremal;
use crate::function::PeriodicFunction;
use crate::kfun::{self, CertificateVariant};
use crate::minimax;
use crate::moduli;
use crate::trig::TrigPoly;
use crate::verify::corpus::{random_trig, CorpusEntry};
use crate::verify::report::{CheckReport, Params, DEFAULT_ABS_TOL};
use crate::verify::Suite;

/// Enclosure tolerances tried in turn until the verdict is conclusive.
pub const TOL_LADDER: [f64; 3] = [1e-4, 1e-6, 1e-8];

pub struct CheckSpec {
    pub id: &'static str,
    pub paper_ref: &'static str,
    pub suite: Suite,
}

const fn spec(id: &'static str, paper_ref: &'static str, suite: Suite) -> CheckSpec {
    CheckSpec { id, paper_ref, suite }
}

pub const REGISTRY: &[CheckSpec] = &[
    spec("L1.w1", "W₂(f,χ_h^k) ≤ W₂(f−g,χ_h^k) + W₂(g,χ_h^k)", Suite::Lemma1),
    spec("L1.w2", "W₂(f,χ_h^k) ≤ 1/2 ω₂(f,kh/2)", Suite::Lemma1),
    spec("L1.w3", "W₂(f,χ_h^k) ≤ 2‖f‖", Suite::Lemma1),
    spec("L1.w4", "W₂(f,χ_h^k) ≤ W₂(f,χ_h^l) + W₂(f,χ_h^{|l−k|})", Suite::Lemma1),
    spec("L1.w5", "W₂(g,χ_h^k) ≤ c_k(h)‖D²g‖, c_k(h) = 2h²/(k+2)! Σ (−1)^j C(k,j)(k/2 − j)^{k+2}", Suite::Lemma1),
    spec("L1.w6", "W₂(f,χ_h^{kl}) ≤ k W₂(f,χ_h^l)", Suite::Lemma1),
    spec("L2", "2/3 K₂(f,h/2) ≤ 1/2 ω₂(f,h) ≤ 2 K₂(f,h/2); lower side via g = f*χ_h²: K₂(f,h/2) ≤ ‖f−g‖ + (h²/4)‖D²g‖ ≤ 3/4 ω₂(f,h)", Suite::Lemma2),
    spec("T1.k2", "2/3 K₂(f,h/(2√6)) ≤ W₂*(f,χ_h²) ≤ 2K₂(f,h/(2√6)); lower side via τ: ‖f−τ‖ + (h²/24)‖D²τ‖ ≤ 3/2 W₂*(f,χ_h²)", Suite::Theorem1),
    spec("T1.k1", "2/5 K₂(f,h/(4√3)) ≤ W₂*(f,χ_h) ≤ 2K₂(f,h/(4√3)); lower side via g₁,g₂: ‖f−g₁‖ + ‖g₁−g₂‖ + (h²/48)‖D²g₂‖ ≤ 5/2 W₂*(f,χ_h)", Suite::Theorem1),
    spec("C1", "1/3 W₂*(f,χ_h^j) ≤ 2/3 K₂(f,h_j) ≤ 1/2 ω₂(f,2h_j) ≤ 2K₂(f,h_j) ≤ c_j W₂*(f,χ_h^j), h₂ = h/(2√6), c₂ = 3; h₁ = h/(4√3), c₁ = 5", Suite::Theorem1),
    spec("C2", "W₂*(f,χ_h²) ≤ 2W₂*(f,χ_h) ≤ 6W₂*(f,χ_h²)", Suite::Theorem1),
    spec("C3", "2/5 K₂(f,h/(4√6)) ≤ W₂*(f,χ_h) ≤ 4K₂(f,h/(4√6))", Suite::Theorem1),
    spec("K.mono", "K₂(f,h) ≤ K₂(f,δ) for h ≤ δ; K₂(f,h)/h² ≤ K₂(f,δ)/δ² for δ ≤ h", Suite::Kfun),
    spec("T2", "4/9 K̃₂(f,h/8,h/(4√3)) ≤ W₂*(f,χ_h) ≤ 2K̃₂(f,h/8,h/(4√3)); lower side: ‖f−g₁‖ + (h/8)‖D(g₁−g₂)‖ + (h²/48)‖D²g₂‖ ≤ 9/4 W₂*(f,χ_h)", Suite::Theorem2),
    spec("T3.j1", "E_{n−1}(f) ≤ c(α) W₂*(f,χ²_{α/(2n)}), c(α) = 1 + 3/(2α²)", Suite::Theorem3),
    spec("T3.j2", "E_{n−1}(f) ≤ 2c(α) W₂*(f,χ_{α/(2n)}), c(α) = 1 + 3/(2α²)", Suite::Theorem3),
    spec("CROSS", "2(1 + 3/(2α²)) ≤ sec(1/α) + tan(1/α) for α ≤ 0.778", Suite::Theorem3),
    spec("J.aa", "E_{n−1}(f) ≤ (sec 1/α + tan 1/α) W₂(f,χ_{α/(2n)}), α > 2/π (exactness at α = 1, 3, … not verified)", Suite::Jackson),
    spec("ZS", "E_{n−1}(f) ≤ (1/2 + 1/(8α²)) ω₂(f,α/(2n)) (exactness at α = 1/(2j) not verified)", Suite::Jackson),
    spec("FAV", "E_{n−1}(g) ≤ ‖D²g‖/(32n²)", Suite::Jackson),
    spec("WF", "E_{n−1}(f) ≤ (1/(32n²))(1 + 4α²)‖D²f‖ and E_{n−1}(f) ≤ (1/(32n²))(1 + 2α²/3)‖D²f‖", Suite::Jackson),
    spec("BNS", "‖D²τ‖ ≤ (2πn)² W₂(c_n,χ_h)^{−1} W₂(τ,χ_h), c_n(t) = cos(2πnt), h ∈ (0,1/n]", Suite::Bernstein),
    spec("SHARP", "‖φ − φ*χ_h‖ = 1 and ‖φ − φ*χ_h²‖ = 2 for φ = Σ_j sign cos(2πnt)*χ_h^j, h = 1/(2n)", Suite::Sharpness),
];

pub fn lookup(id: &str) -> Result<&'static CheckSpec> {
    REGISTRY
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::UnknownCheck(id.to_string()))
}

/// `1 + 3/(2α²)`
pub fn c_alpha(alpha: f64) -> f64 {
    1.0 + 1.5 / (alpha * alpha)
}

/// `sec(1/α) + tan(1/α)`
pub fn jackson_constant(alpha: f64) -> f64 {
    let x = 1.0 / alpha;
    (1.0 + x.sin()) / x.cos()
}

/// Default parameter grids.
pub mod grids {
    pub const LEMMA1_H: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];
    pub const LEMMA1_K: [u32; 4] = [1, 2, 3, 4];
    pub const THEOREM_H: [f64; 3] = [0.5, 0.25, 0.125];
    pub const N: [usize; 4] = [1, 2, 4, 8];
    pub const T3_ALPHA: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
    pub const JACKSON_ALPHA: [f64; 3] = [0.7, 1.0, 2.0];
    pub const SHARP_N: [usize; 3] = [1, 2, 4];
    pub const SHARP_M: usize = 40;
    pub const SHARP_BAND: f64 = 1e-6;
    pub const BNS_N: [usize; 3] = [2, 4, 8];
    pub const BNS_COUNT: usize = 200;
    pub const RANDOM_SMOOTH_COUNT: usize = 50;
    pub const FAV_N: [usize; 3] = [1, 2, 4];

    /// `h_i = 0.5·0.6^i`, ten points.
    pub fn kmono_h() -> Vec<f64> {
        (0..10).map(|i| 0.5 * 0.6f64.powi(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Q<'a> {
    W2 { f: &'a str, h: f64, k: u32, star: bool },
    Omega2 { f: &'a str, h: f64 },
    Norm { f: &'a str },
    NormD2 { f: &'a str },
    /// `‖Δ_h² f‖`
    Delta2 { f: &'a str, h: f64 },
    E { f: &'a str, n: usize },
    /// Upper estimate of `K₂` (certificate objective).
    K2 { f: &'a str, h: f64 },
    /// `[discrete optimum, certificate]` bracketing `K₂` over the search space.
    K2Range { f: &'a str, h: f64 },
    KTilde { f: &'a str, h1: f64, h2: f64 },
    Cert { f: &'a str, h: f64, variant: CertificateVariant },
}

impl Q<'_> {
    fn key(&self) -> String {
        format!("{self:?}")
    }

    fn tol_sensitive(&self) -> bool {
        !matches!(self, Q::K2 { .. } | Q::K2Range { .. } | Q::KTilde { .. })
    }
}

type Lin<'a> = Vec<(f64, Q<'a>)>;

#[derive(Debug, Clone, Copy)]
pub struct Config {
    /// Verdict tolerance.
    pub abs_tol: f64,
    /// Seed of the random polynomial families.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            abs_tol: DEFAULT_ABS_TOL,
            seed: 42,
        }
    }
}

/// Holds the function table and the quantity cache of a run.
pub struct Verifier {
    pub config: Config,
    functions: HashMap<String, PeriodicFunction>,
    cache: HashMap<String, (f64, CertifiedValue)>,
}

fn kfun_options() -> kfun::Options {
    kfun::Options {
        degree: None,
        tol: kfun::DEFAULT_TOL,
        check_convergence: false,
    }
}

/// Errors reporting a best enclosure are usable results.
fn best_effort(r: Result<CertifiedValue>) -> Result<CertifiedValue> {
    match r {
        Err(Error::ToleranceNotMet { best, .. }) => Ok(best),
        other => other,
    }
}

fn lin_sum(parts: &[(f64, CertifiedValue)]) -> CertifiedValue {
    let mut acc = CertifiedValue::exact(0.0);
    for (c, v) in parts {
        acc = acc.add(&v.scale(*c));
    }
    acc
}

impl Verifier {
    pub fn new(config: Config) -> Self {
        Verifier {
            config,
            functions: HashMap::new(),
            cache: HashMap::new(),
        }
    }

    /// Register `f` under `name`; re-registering a name with another function is an error.
    pub fn register(&mut self, name: &str, f: &PeriodicFunction) -> Result<()> {
        if let Some(old) = self.functions.get(name) {
            let same = serde_json::to_string(old).ok() == serde_json::to_string(f).ok();
            if !same {
                return Err(Error::InvalidArgument(format!("function name `{name}` is used twice")));
            }
            return Ok(());
        }
        self.functions.insert(name.to_string(), f.clone());
        Ok(())
    }

    fn function(&self, name: &str) -> Result<&PeriodicFunction> {
        self.functions
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown function `{name}`")))
    }

    fn eval(&mut self, q: &Q, tol: f64) -> Result<CertifiedValue> {
        let key = q.key();
        let prev = self.cache.get(&key).copied();
        if let Some((t, v)) = prev {
            if t <= tol || !q.tol_sensitive() {
                return Ok(v);
            }
        }
        let v = self.compute(q, tol)?;
        // both enclosures are valid: keep their intersection
        let v = match prev {
            Some((_, old)) if old.lo <= v.hi && v.lo <= old.hi => {
                CertifiedValue::new(old.lo.max(v.lo), old.hi.min(v.hi), v.method)
            }
            _ => v,
        };
        self.cache.insert(key, (tol, v));
        Ok(v)
    }

    fn compute(&self, q: &Q, tol: f64) -> Result<CertifiedValue> {
        match *q {
            Q::W2 { f, h, k, star } => {
                let f = self.function(f)?;
                best_effort(if star { moduli::w2_star(f, h, k, tol) } else { moduli::w2(f, h, k, tol) })
            }
            Q::Omega2 { f, h } => best_effort(moduli::omega2(self.function(f)?, h, tol)),
            Q::Norm { f } => best_effort(self.function(f)?.sup_norm(tol)),
            Q::NormD2 { f } => best_effort(self.function(f)?.derivative(2)?.sup_norm(tol)),
            Q::Delta2 { f, h } => best_effort(self.function(f)?.second_difference(h).sup_norm(tol)),
            Q::E { f, n } => minimax::best_approx_error(self.function(f)?, n, tol),
            Q::K2 { f, h } => Ok(kfun::k2_estimate_with(self.function(f)?, h, &kfun_options())?.value),
            Q::K2Range { f, h } => {
                let e = kfun::k2_estimate_with(self.function(f)?, h, &kfun_options())?;
                Ok(CertifiedValue::new(e.discrete_optimum.min(e.value.lo), e.value.hi, Method::Solver))
            }
            Q::KTilde { f, h1, h2 } => {
                Ok(kfun::ktilde2_estimate_with(self.function(f)?, h1, h2, &kfun_options())?.value)
            }
            Q::Cert { f, h, variant } => {
                Ok(kfun::k2_construction_certificate(self.function(f)?, h, variant, tol)?.value)
            }
        }
    }

    /// Enclosures of both sides after cancelling common terms.
    fn sides(&mut self, lhs: &Lin, rhs: &Lin, tol: f64) -> Result<(CertifiedValue, CertifiedValue)> {
        let mut l: Vec<(f64, String, Q)> = lhs.iter().map(|(c, q)| (*c, q.key(), *q)).collect();
        let mut r: Vec<(f64, String, Q)> = rhs.iter().map(|(c, q)| (*c, q.key(), *q)).collect();
        for a in l.iter_mut() {
            for b in r.iter_mut() {
                if a.1 == b.1 && a.0 > 0.0 && b.0 > 0.0 {
                    let m = a.0.min(b.0);
                    a.0 -= m;
                    b.0 -= m;
                }
            }
        }
        let mut side = |terms: &[(f64, String, Q)]| -> Result<CertifiedValue> {
            let mut parts = Vec::new();
            for (c, _, q) in terms {
                if *c != 0.0 {
                    parts.push((*c, self.eval(q, tol)?));
                }
            }
            Ok(lin_sum(&parts))
        };
        let lv = side(&l)?;
        let rv = side(&r)?;
        Ok((lv, rv))
    }

    fn decide(&mut self, id: &str, params: Params, lhs: Lin, rhs: Lin) -> Result<CheckReport> {
        let spec = lookup(id)?;
        let mut last = None;
        for &tol in &TOL_LADDER {
            let (l, r) = self.sides(&lhs, &rhs, tol)?;
            let report = CheckReport::new(id, spec.paper_ref, params.clone(), l, r, self.config.abs_tol);
            let done = report.status != crate::verify::report::Status::Inconclusive;
            last = Some(report);
            if done {
                break;
            }
        }
        Ok(last.expect("ladder is nonempty"))
    }

    fn decide_values(&self, id: &str, params: Params, lhs: CertifiedValue, rhs: CertifiedValue) -> Result<CheckReport> {
        let spec = lookup(id)?;
        Ok(CheckReport::new(id, spec.paper_ref, params, lhs, rhs, self.config.abs_tol))
    }

    /// Run one registered check on the registered function `params["fn"]`.
    pub fn run(&mut self, id: &str, params: &Params) -> Result<CheckReport> {
        lookup(id)?;
        let p = ParamReader { id, params };
        let out = params.clone();
        let sqrt3 = 3f64.sqrt();
        let sqrt6 = 6f64.sqrt();
        if id == "CROSS" {
            let a = p.num_or("alpha", 0.778)?;
            let lhs = CertifiedValue::exact(2.0 * c_alpha(a)).widen(1e-15 * c_alpha(a));
            let rhs = CertifiedValue::exact(jackson_constant(a)).widen(1e-15 * jackson_constant(a));
            return self.decide_values(id, out, lhs, rhs);
        }
        let fname = p.text("fn")?;
        let f = fname.as_str();
        self.function(f)?;
        use Q::*;
        match id {
            "L1.w1" | "L1.w2" | "L1.w3" | "L1.w4" | "L1.w5" | "L1.w6" => {
                let h = p.h()?;
                let k = p.int("k")? as u32;
                let star = match p.text_or("modulus", "w2")?.as_str() {
                    "w2" => false,
                    "w2star" => true,
                    other => return Err(p.bad("modulus", &format!("`{other}` is not w2 or w2star"))),
                };
                let (g, diff) = if id == "L1.w1" {
                    let g = p.text("g")?;
                    let diff = format!("{f}−{g}");
                    let fd = self.function(f)?.sub(self.function(&g)?);
                    self.register(&diff, &fd)?;
                    (g, diff)
                } else {
                    Default::default()
                };
                let w = |f, k| W2 { f, h, k, star };
                let (lhs, rhs) = match id {
                    "L1.w1" => (vec![(1.0, w(f, k))], vec![(1.0, w(&diff, k)), (1.0, w(&g, k))]),
                    "L1.w2" => (vec![(1.0, w(f, k))], vec![(0.5, Omega2 { f, h: k as f64 * h / 2.0 })]),
                    "L1.w3" => (vec![(1.0, w(f, k))], vec![(2.0, Norm { f })]),
                    "L1.w4" => {
                        let l = p.int("l")? as u32;
                        let mut rhs = vec![(1.0, w(f, l))];
                        if l != k {
                            rhs.push((1.0, w(f, l.abs_diff(k))));
                        }
                        (vec![(1.0, w(f, k))], rhs)
                    }
                    "L1.w5" => {
                        let c = crate::bspline::BSplineKernel::new(h, k)?.second_moment_constant();
                        (vec![(1.0, w(f, k))], vec![(c, NormD2 { f })])
                    }
                    _ => {
                        let l = p.int("l")? as u32;
                        (vec![(1.0, w(f, k * l))], vec![(k as f64, w(f, l))])
                    }
                };
                self.decide(id, out, lhs, rhs)
            }
            "L2" => {
                let h = p.h()?;
                match p.text("side")?.as_str() {
                    "upper" => self.decide(id, out, vec![(0.5, Omega2 { f, h })], vec![(2.0, K2 { f, h: h / 2.0 })]),
                    "lower" => self.decide(
                        id,
                        out,
                        l2_certificate(f, h, 2.0 / 3.0),
                        vec![(0.5, Omega2 { f, h })],
                    ),
                    s => Err(p.bad("side", &format!("`{s}` is not upper or lower"))),
                }
            }
            "T1.k2" | "T1.k1" => {
                let h = p.h()?;
                let (k, hk, variant, c) = if id == "T1.k2" {
                    (2, h / (2.0 * sqrt6), CertificateVariant::TauK2, 1.5)
                } else {
                    (1, h / (4.0 * sqrt3), CertificateVariant::G1G2K1, 2.5)
                };
                let ws = W2 { f, h, k, star: true };
                match p.text("side")?.as_str() {
                    "right" => self.decide(id, out, vec![(1.0, ws)], vec![(2.0, K2 { f, h: hk })]),
                    "left" => self.decide(id, out, vec![(1.0, Cert { f, h, variant })], vec![(c, ws)]),
                    s => Err(p.bad("side", &format!("`{s}` is not left or right"))),
                }
            }
            "C1" => {
                let h = p.h()?;
                let chain = p.int("chain")?;
                let (hj, k, variant, c) = match chain {
                    2 => (h / (2.0 * sqrt6), 2, CertificateVariant::TauK2, 3.0),
                    1 => (h / (4.0 * sqrt3), 1, CertificateVariant::G1G2K1, 5.0),
                    _ => return Err(p.bad("chain", "must be 1 (χ_h) or 2 (χ_h²)")),
                };
                let ws = W2 { f, h, k, star: true };
                let (lhs, rhs) = match p.int("link")? {
                    1 => (vec![(1.0 / 3.0, ws)], vec![(2.0 / 3.0, K2 { f, h: hj })]),
                    2 => (l2_certificate(f, 2.0 * hj, 2.0 / 3.0), vec![(0.5, Omega2 { f, h: 2.0 * hj })]),
                    3 => (vec![(0.5, Omega2 { f, h: 2.0 * hj })], vec![(2.0, K2 { f, h: hj })]),
                    4 => (vec![(2.0, Cert { f, h, variant })], vec![(c, ws)]),
                    _ => return Err(p.bad("link", "must be 1..=4")),
                };
                self.decide(id, out, lhs, rhs)
            }
            "C2" => {
                let h = p.h()?;
                let w1 = W2 { f, h, k: 1, star: true };
                let w2 = W2 { f, h, k: 2, star: true };
                match p.text("side")?.as_str() {
                    "left" => self.decide(id, out, vec![(1.0, w2)], vec![(2.0, w1)]),
                    "right" => self.decide(id, out, vec![(2.0, w1)], vec![(6.0, w2)]),
                    s => Err(p.bad("side", &format!("`{s}` is not left or right"))),
                }
            }
            "C3" => {
                let h = p.h()?;
                let w1 = W2 { f, h, k: 1, star: true };
                match p.text("side")?.as_str() {
                    // K₂(f,h/(4√6)) ≤ K₂(f,h/(4√3)) ≤ certificate of the g₁,g₂ construction
                    "left" => self.decide(
                        id,
                        out,
                        vec![(0.4, Cert { f, h, variant: CertificateVariant::G1G2K1 })],
                        vec![(1.0, w1)],
                    ),
                    "right" => self.decide(id, out, vec![(1.0, w1)], vec![(4.0, K2 { f, h: h / (4.0 * sqrt6) })]),
                    s => Err(p.bad("side", &format!("`{s}` is not left or right"))),
                }
            }
            "K.mono" => {
                let h = p.num("h")?;
                let delta = p.num("delta")?;
                let (small, big) = (h.min(delta), h.max(delta));
                match p.text("form")?.as_str() {
                    "k1" => self.decide(id, out, vec![(1.0, K2Range { f, h: small })], vec![(1.0, K2Range { f, h: big })]),
                    // K(big)/big² ≤ K(small)/small², scaled by small²
                    "k2" => {
                        let r = (small / big) * (small / big);
                        self.decide(id, out, vec![(r, K2Range { f, h: big })], vec![(1.0, K2Range { f, h: small })])
                    }
                    s => Err(p.bad("form", &format!("`{s}` is not k1 or k2"))),
                }
            }
            "T2" => {
                let h = p.h()?;
                let w1 = W2 { f, h, k: 1, star: true };
                match p.text("side")?.as_str() {
                    "right" => self.decide(
                        id,
                        out,
                        vec![(1.0, w1)],
                        vec![(2.0, KTilde { f, h1: h / 8.0, h2: h / (4.0 * sqrt3) })],
                    ),
                    "left" => self.decide(
                        id,
                        out,
                        vec![(1.0, Cert { f, h, variant: CertificateVariant::G1G2Tilde })],
                        vec![(2.25, w1)],
                    ),
                    s => Err(p.bad("side", &format!("`{s}` is not left or right"))),
                }
            }
            "T3.j1" | "T3.j2" | "J.aa" | "ZS" | "WF" | "FAV" => {
                let n = p.int("n")? as usize;
                if n == 0 {
                    return Err(p.bad("n", "must be ≥ 1"));
                }
                let nf = n as f64;
                let lhs = vec![(1.0, E { f, n })];
                let rhs = match id {
                    "FAV" => vec![(1.0 / (32.0 * nf * nf), NormD2 { f })],
                    _ => {
                        let a = p.num("alpha")?;
                        if !(a > 0.0) {
                            return Err(p.bad("alpha", "must be > 0"));
                        }
                        let h = a / (2.0 * nf);
                        match id {
                            "T3.j1" => vec![(c_alpha(a), W2 { f, h, k: 2, star: true })],
                            "T3.j2" => vec![(2.0 * c_alpha(a), W2 { f, h, k: 1, star: true })],
                            "J.aa" => {
                                if a <= 2.0 / PI {
                                    return Err(p.bad("alpha", "the inequality needs α > 2/π"));
                                }
                                vec![(jackson_constant(a), W2 { f, h, k: 1, star: false })]
                            }
                            "ZS" => vec![(0.5 + 0.125 / (a * a), Omega2 { f, h })],
                            _ => {
                                let c = match p.text("form")?.as_str() {
                                    "zs" => 1.0 + 4.0 * a * a,
                                    "j" => 1.0 + 2.0 * a * a / 3.0,
                                    s => return Err(p.bad("form", &format!("`{s}` is not zs or j"))),
                                };
                                vec![(c / (32.0 * nf * nf), NormD2 { f })]
                            }
                        }
                    }
                };
                self.decide(id, out, lhs, rhs)
            }
            "BNS" => {
                let n = p.int("n")? as usize;
                let h = p.num("h")?;
                if n == 0 || !(h > 0.0 && h <= 1.0 / n as f64) {
                    return Err(p.bad("h", "needs n ≥ 1 and h ∈ (0, 1/n]"));
                }
                let cn = format!("cos{n}");
                self.register(&cn, &PeriodicFunction::Trig(TrigPoly::cosine(n)))?;
                let tol = TOL_LADDER[TOL_LADDER.len() - 1];
                let lhs = self.eval(&NormD2 { f }, tol)?;
                let wt = self.eval(&W2 { f, h, k: 1, star: false }, tol)?;
                let wc = self.eval(&W2 { f: &cn, h, k: 1, star: false }, tol)?;
                let c = (2.0 * PI * n as f64).powi(2);
                let method = crate::certified::weaker(wt.method, wc.method);
                let rhs = CertifiedValue::new(c * wt.lo / wc.hi, c * wt.hi / wc.lo.max(f64::MIN_POSITIVE), method);
                self.decide_values(id, out, lhs, rhs)
            }
            "SHARP" => {
                let n = p.int("n")? as usize;
                if n == 0 {
                    return Err(p.bad("n", "must be ≥ 1"));
                }
                let h = 0.5 / n as f64;
                let tol = TOL_LADDER[TOL_LADDER.len() - 1];
                let band = p.num_or("band", grids::SHARP_BAND)?;
                let w1 = self.eval(&W2 { f, h, k: 1, star: false }, tol)?;
                let w2 = self.eval(&W2 { f, h, k: 2, star: false }, tol)?;
                let dist = |v: CertifiedValue, c: f64| {
                    let lo = (v.lo - c).max(c - v.hi).max(0.0);
                    let hi = (v.lo - c).abs().max((v.hi - c).abs());
                    (lo, hi)
                };
                let (a, b) = dist(w1, 1.0);
                let (c, d) = dist(w2, 2.0);
                let lhs = CertifiedValue::new(a.max(c), b.max(d), crate::certified::weaker(w1.method, w2.method));
                self.decide_values(id, out, lhs, CertifiedValue::exact(band))
            }
            _ => unreachable!("registered id {id}"),
        }
    }

    /// Reports for one suite over a corpus, in a fixed order.
    pub fn run_suite(&mut self, suite: Suite, corpus: &[CorpusEntry]) -> Result<Vec<CheckReport>> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for e in corpus {
            self.register(&e.name, &e.function)?;
        }
        let mut out = Vec::new();
        for s in Suite::ALL_SUITES {
            if suite == Suite::All || suite == s {
                for params in self.plan(s, corpus)? {
                    let id = params["check"].as_str().unwrap().to_string();
                    let mut params = params;
                    params.remove("check");
                    out.push(self.run(&id, &params)?);
                }
            }
        }
        Ok(out)
    }

    /// Parameter sets of a suite (each with its check id under `check`).
    fn plan(&mut self, suite: Suite, corpus: &[CorpusEntry]) -> Result<Vec<Params>> {
        let mut plan = Vec::new();
        let mut push = |check: &str, pairs: &[(&str, serde_json::Value)]| {
            let mut p = Params::new();
            p.insert("check".into(), check.into());
            for (k, v) in pairs {
                p.insert(k.to_string(), v.clone());
            }
            plan.push(p);
        };
        let hs = |e: &CorpusEntry, default: &[f64]| e.params.h.clone().unwrap_or_else(|| default.to_vec());
        let ns = |e: &CorpusEntry| e.params.n.clone().unwrap_or_else(|| grids::N.to_vec());
        let alphas = |e: &CorpusEntry, default: &[f64]| e.params.alpha.clone().unwrap_or_else(|| default.to_vec());
        match suite {
            Suite::Lemma1 => {
                for (i, e) in corpus.iter().enumerate() {
                    let g = &corpus[(i + 1) % corpus.len()].name;
                    let ks = e.params.k.clone().unwrap_or_else(|| grids::LEMMA1_K.to_vec());
                    for modulus in ["w2", "w2star"] {
                        for &h in &hs(e, &grids::LEMMA1_H) {
                            let base = |extra: &[(&'static str, serde_json::Value)]| -> Vec<(&'static str, serde_json::Value)> {
                                let mut v = vec![
                                    ("fn", e.name.as_str().into()),
                                    ("modulus", modulus.into()),
                                    ("h", h.into()),
                                ];
                                v.extend_from_slice(extra);
                                v
                            };
                            for &k in &ks {
                                push("L1.w1", &base(&[("k", k.into()), ("g", g.as_str().into())]));
                                push("L1.w2", &base(&[("k", k.into())]));
                                push("L1.w3", &base(&[("k", k.into())]));
                                for &l in &ks {
                                    push("L1.w4", &base(&[("k", k.into()), ("l", l.into())]));
                                }
                                if e.function.is_smooth() {
                                    push("L1.w5", &base(&[("k", k.into())]));
                                }
                                for &l in &ks {
                                    push("L1.w6", &base(&[("k", k.into()), ("l", l.into())]));
                                }
                            }
                        }
                    }
                }
            }
            Suite::Lemma2 => {
                for e in corpus {
                    for &h in &hs(e, &grids::THEOREM_H) {
                        for side in ["lower", "upper"] {
                            push("L2", &[("fn", e.name.as_str().into()), ("h", h.into()), ("side", side.into())]);
                        }
                    }
                }
            }
            Suite::Theorem1 => {
                for e in corpus {
                    for &h in &hs(e, &grids::THEOREM_H) {
                        let f: serde_json::Value = e.name.as_str().into();
                        for id in ["T1.k2", "T1.k1"] {
                            for side in ["left", "right"] {
                                push(id, &[("fn", f.clone()), ("h", h.into()), ("side", side.into())]);
                            }
                        }
                        for chain in [2, 1] {
                            for link in 1..=4 {
                                push("C1", &[("fn", f.clone()), ("h", h.into()), ("chain", chain.into()), ("link", link.into())]);
                            }
                        }
                        for id in ["C2", "C3"] {
                            for side in ["left", "right"] {
                                push(id, &[("fn", f.clone()), ("h", h.into()), ("side", side.into())]);
                            }
                        }
                    }
                }
            }
            Suite::Theorem2 => {
                for e in corpus {
                    for &h in &hs(e, &grids::THEOREM_H) {
                        for side in ["left", "right"] {
                            push("T2", &[("fn", e.name.as_str().into()), ("h", h.into()), ("side", side.into())]);
                        }
                    }
                }
            }
            Suite::Theorem3 => {
                for e in corpus {
                    for &n in &ns(e) {
                        for &a in &alphas(e, &grids::T3_ALPHA) {
                            for id in ["T3.j1", "T3.j2"] {
                                push(id, &[("fn", e.name.as_str().into()), ("n", n.into()), ("alpha", a.into())]);
                            }
                        }
                    }
                }
                push("CROSS", &[("alpha", 0.778.into())]);
            }
            Suite::Jackson => {
                for e in corpus {
                    let f: serde_json::Value = e.name.as_str().into();
                    for &n in &ns(e) {
                        for &a in &alphas(e, &grids::JACKSON_ALPHA) {
                            if a > 2.0 / PI {
                                push("J.aa", &[("fn", f.clone()), ("n", n.into()), ("alpha", a.into())]);
                            }
                        }
                        for &a in &alphas(e, &grids::T3_ALPHA) {
                            push("ZS", &[("fn", f.clone()), ("n", n.into()), ("alpha", a.into())]);
                        }
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
                let mut smooth: Vec<String> = corpus.iter().filter(|e| e.function.is_smooth()).map(|e| e.name.clone()).collect();
                for i in 0..grids::RANDOM_SMOOTH_COUNT {
                    let degree = rng.gen_range(1..=8);
                    let name = format!("rand{i}_d{degree}");
                    self.register(&name, &PeriodicFunction::Trig(random_trig(&mut rng, degree)))?;
                    smooth.push(name);
                }
                for name in &smooth {
                    for n in grids::FAV_N {
                        push("FAV", &[("fn", name.as_str().into()), ("n", n.into())]);
                        for a in grids::T3_ALPHA {
                            for form in ["zs", "j"] {
                                push("WF", &[("fn", name.as_str().into()), ("n", n.into()), ("alpha", a.into()), ("form", form.into())]);
                            }
                        }
                    }
                }
            }
            Suite::Bernstein => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ 0xb5);
                for n in grids::BNS_N {
                    for i in 0..grids::BNS_COUNT {
                        let name = format!("tau{i}_n{n}");
                        let mut tau = random_trig(&mut rng, n);
                        // degree exactly n
                        if tau.a(n) == 0.0 && tau.b(n) == 0.0 {
                            tau = tau.add(&TrigPoly::cosine(n));
                        }
                        self.register(&name, &PeriodicFunction::Trig(tau))?;
                        for h in [0.5 / n as f64, 1.0 / n as f64] {
                            push("BNS", &[("fn", name.as_str().into()), ("n", n.into()), ("h", h.into())]);
                        }
                    }
                }
            }
            Suite::Kfun => {
                for e in corpus {
                    let mut grid = e.params.h.clone().unwrap_or_else(grids::kmono_h);
                    grid.sort_by(|a, b| b.total_cmp(a));
                    for w in grid.windows(2) {
                        for form in ["k1", "k2"] {
                            push(
                                "K.mono",
                                &[("fn", e.name.as_str().into()), ("h", w[1].into()), ("delta", w[0].into()), ("form", form.into())],
                            );
                        }
                    }
                }
            }
            Suite::Sharpness => {
                for n in grids::SHARP_N {
                    let name = format!("phi{}_n{n}", grids::SHARP_M);
                    let phi = extremal::phi_partial(n, grids::SHARP_M)?;
                    self.register(&name, &phi.as_function())?;
                    push(
                        "SHARP",
                        &[
                            ("fn", name.as_str().into()),
                            ("n", n.into()),
                            ("m", grids::SHARP_M.into()),
                            ("tail_bound", phi.tail_bound.into()),
                        ],
                    );
                }
            }
            Suite::All => unreachable!(),
        }
        Ok(plan)
    }
}

/// `scale·(‖f − f*χ_h²‖ + (1/4)‖Δ_h² f‖)`, the Steklov certificate of `K₂(f,h/2)`
/// (`D²(f*χ_h²) = h^{−2}Δ_h²f`).
fn l2_certificate(f: &str, h: f64, scale: f64) -> Lin<'_> {
    vec![
        (scale, Q::W2 { f, h, k: 2, star: false }),
        (0.25 * scale, Q::Delta2 { f, h }),
    ]
}

struct ParamReader<'a> {
    id: &'a str,
    params: &'a Params,
}

impl ParamReader<'_> {
    fn missing(&self, key: &str) -> Error {
        Error::MissingParam {
            check: self.id.to_string(),
            param: key.to_string(),
        }
    }

    fn bad(&self, key: &str, why: &str) -> Error {
        Error::InvalidArgument(format!("check `{}`: parameter `{key}` {why}", self.id))
    }

    fn num(&self, key: &str) -> Result<f64> {
        let v = self.params.get(key).ok_or_else(|| self.missing(key))?;
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.bad(key, "must be a finite number"))
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.params.contains_key(key) {
            self.num(key)
        } else {
            Ok(default)
        }
    }

    fn h(&self) -> Result<f64> {
        let h = self.num("h")?;
        if !(h > 0.0 && h <= 1.0) {
            return Err(self.bad("h", "must lie in (0, 1]"));
        }
        Ok(h)
    }

    fn int(&self, key: &str) -> Result<u64> {
        let v = self.params.get(key).ok_or_else(|| self.missing(key))?;
        v.as_u64().ok_or_else(|| self.bad(key, "must be a nonnegative integer"))
    }

    fn text(&self, key: &str) -> Result<String> {
        let v = self.params.get(key).ok_or_else(|| self.missing(key))?;
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| self.bad(key, "must be a string"))
    }

    fn text_or(&self, key: &str, default: &str) -> Result<String> {
        if self.params.contains_key(key) {
            self.text(key)
        } else {
            Ok(default.to_string())
        }
    }
}

/// Summary table: one row per check id with pass/fail/inconclusive counts.
pub fn summary_table(reports: &[CheckReport]) -> String {
    let mut rows: Vec<(&str, [usize; 3])> = Vec::new();
    for r in reports {
        let i = match rows.iter().position(|(id, _)| *id == r.check_id) {
            Some(i) => i,
            None => {
                rows.push((&r.check_id, [0; 3]));
                rows.len() - 1
            }
        };
        let slot = match r.status {
            crate::verify::report::Status::Pass => 0,
            crate::verify::report::Status::Fail => 1,
            crate::verify::report::Status::Inconclusive => 2,
        };
        rows[i].1[slot] += 1;
    }
    let mut s = String::new();
    writeln!(s, "{:<8} {:>6} {:>6} {:>13}", "check", "pass", "fail", "inconclusive").unwrap();
    for (id, [p, f, i]) in rows {
        writeln!(s, "{id:<8} {p:>6} {f:>6} {i:>13}").unwrap();
    }
    s
}
