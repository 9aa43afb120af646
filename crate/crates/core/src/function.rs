use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::certified::{CertifiedValue, Method};
use crate::error::{Error, Result};
use crate::piecewise::{norm01, PiecewisePoly, Side, Singularity};
use crate::supnorm;
use crate::trig::TrigPoly;

/// Default absolute tolerance for certified sup-norms.
pub const DEFAULT_TOL: f64 = 1e-8;

/// A function known only through point samples.
#[derive(Clone)]
pub struct Sampled {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Lipschitz hint used to certify suprema; estimated from a DFT when absent.
    pub lipschitz: Option<f64>,
    pub smooth: bool,
}

impl fmt::Debug for Sampled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sampled")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("smooth", &self.smooth)
            .finish()
    }
}

/// A real 1-periodic function.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Doc", into = "Doc")]
pub enum PeriodicFunction {
    Trig(TrigPoly),
    Piecewise(PiecewisePoly),
    /// `sign cos(2πnt)`.
    SquareWave(usize),
    Closure(Sampled),
    Sum(Vec<PeriodicFunction>),
    Scale(f64, Box<PeriodicFunction>),
    /// `t ↦ f(t + s)`.
    Shift(f64, Box<PeriodicFunction>),
}

/// Exact normal form: a trigonometric polynomial plus an optional piecewise polynomial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Exact {
    pub trig: TrigPoly,
    pub pw: Option<PiecewisePoly>,
}

impl Exact {
    pub fn from_trig(trig: TrigPoly) -> Self {
        Exact { trig, pw: None }
    }

    pub fn from_pw(pw: PiecewisePoly) -> Self {
        Exact {
            trig: TrigPoly::zero(),
            pw: Some(pw),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_side(t, Side::Right)
    }

    pub fn eval_side(&self, t: f64, side: Side) -> f64 {
        let t = norm01(t);
        self.trig.eval(t) + self.pw.as_ref().map_or(0.0, |p| p.eval_side(t, side))
    }

    pub fn add(&self, o: &Exact) -> Exact {
        self.combine(1.0, o, 1.0)
    }

    pub fn sub(&self, o: &Exact) -> Exact {
        self.combine(1.0, o, -1.0)
    }

    pub fn combine(&self, a: f64, o: &Exact, b: f64) -> Exact {
        let trig = self.trig.scale(a).add(&o.trig.scale(b));
        let pw = match (&self.pw, &o.pw) {
            (None, None) => None,
            (Some(p), None) => Some(p.scale(a)),
            (None, Some(q)) => Some(q.scale(b)),
            (Some(p), Some(q)) => Some(p.linear_combination(a, q, b)),
        };
        Exact { trig, pw }
    }

    pub fn scale(&self, s: f64) -> Exact {
        Exact {
            trig: self.trig.scale(s),
            pw: self.pw.as_ref().map(|p| p.scale(s)),
        }
    }

    pub fn shift(&self, s: f64) -> Exact {
        Exact {
            trig: self.trig.shift(s),
            pw: self.pw.as_ref().map(|p| p.shift(s)),
        }
    }

    pub fn second_difference(&self, u: f64) -> Exact {
        Exact {
            trig: self.trig.second_difference(u),
            pw: self.pw.as_ref().map(|p| p.second_difference(u)),
        }
    }

    pub fn derivative(&self, order: u32) -> Result<Exact> {
        Ok(Exact {
            trig: self.trig.derivative(order),
            pw: self.pw.as_ref().map(|p| p.derivative(order)).transpose()?,
        })
    }

    /// Highest continuous derivative order (`-1` with jumps, `i32::MAX` for trig-only).
    pub fn continuity(&self) -> i32 {
        self.pw.as_ref().map_or(i32::MAX, |p| p.continuity)
    }

    pub fn singularities(&self) -> Vec<Singularity> {
        self.pw.as_ref().map_or_else(Vec::new, |p| p.singularities())
    }

    /// Enclosure of `max_t σ f(t)` (one-sided limits included).
    pub fn max(&self, sign: f64, tol: f64) -> Result<(f64, f64)> {
        match &self.pw {
            None => supnorm::trig_max(&self.trig, sign, tol),
            Some(p) if self.trig.derivative_bound(0) == 0.0 => {
                Ok(p.scale(sign).max_enclosure(tol))
            }
            Some(p) => supnorm::mixed_max(&self.trig, p, sign, tol),
        }
    }

    pub fn sup_norm(&self, tol: f64) -> Result<CertifiedValue> {
        let (lo1, hi1) = self.max(1.0, tol)?;
        let (lo2, hi2) = self.max(-1.0, tol)?;
        let lo = lo1.max(lo2).max(0.0);
        let hi = hi1.max(hi2).max(lo);
        let method = if self.pw.is_none() {
            Method::GridRefine
        } else if self.trig.derivative_bound(0) == 0.0 {
            Method::Exact
        } else {
            Method::GridRefine
        };
        Ok(CertifiedValue::new(lo, hi, method))
    }

    /// Bound of `‖D²f‖` over smooth pieces (singular parts excluded).
    pub fn second_derivative_bound(&self) -> f64 {
        self.trig.derivative_bound(2) + self.pw.as_ref().map_or(0.0, |p| p.second_derivative_bound())
    }

    pub fn first_derivative_bound(&self) -> f64 {
        self.trig.derivative_bound(1) + self.pw.as_ref().map_or(0.0, |p| p.first_derivative_bound())
    }

    pub fn into_function(self) -> PeriodicFunction {
        match self.pw {
            None => PeriodicFunction::Trig(self.trig),
            Some(p) if self.trig.derivative_bound(0) == 0.0 => PeriodicFunction::Piecewise(p),
            Some(p) => PeriodicFunction::Sum(vec![
                PeriodicFunction::Trig(self.trig),
                PeriodicFunction::Piecewise(p),
            ]),
        }
    }
}

impl PeriodicFunction {
    pub fn constant(c: f64) -> Self {
        PeriodicFunction::Trig(TrigPoly::constant(c))
    }

    pub fn closure(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: Option<f64>,
        smooth: bool,
    ) -> Self {
        PeriodicFunction::Closure(Sampled {
            name: name.into(),
            f: Arc::new(f),
            lipschitz,
            smooth,
        })
    }

    /// Exact normal form, or `None` when a sampled closure is involved.
    pub fn exact(&self) -> Option<Exact> {
        Some(match self {
            PeriodicFunction::Trig(p) => Exact::from_trig(p.clone()),
            PeriodicFunction::Piecewise(p) => Exact::from_pw(p.clone()),
            PeriodicFunction::SquareWave(n) => Exact::from_pw(PiecewisePoly::square_wave(*n)),
            PeriodicFunction::Closure(_) => return None,
            PeriodicFunction::Sum(fs) => {
                let mut acc = Exact::default();
                for f in fs {
                    acc = acc.add(&f.exact()?);
                }
                acc
            }
            PeriodicFunction::Scale(c, f) => f.exact()?.scale(*c),
            PeriodicFunction::Shift(s, f) => f.exact()?.shift(*s),
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let t = norm01(t);
        let v = match self {
            PeriodicFunction::Trig(p) => p.eval(t),
            PeriodicFunction::Piecewise(p) => p.eval(t),
            PeriodicFunction::SquareWave(n) => {
                // right-continuous at the jumps, like the piecewise form
                let x = norm01(*n as f64 * t);
                if !(0.25..0.75).contains(&x) {
                    1.0
                } else {
                    -1.0
                }
            }
            PeriodicFunction::Closure(s) => {
                let v = (s.f)(t);
                if !v.is_finite() {
                    return Err(Error::Evaluation {
                        t,
                        reason: format!("closure `{}` returned {v}", s.name),
                    });
                }
                v
            }
            PeriodicFunction::Sum(fs) => {
                let mut acc = 0.0;
                for f in fs {
                    acc += f.eval(t)?;
                }
                acc
            }
            PeriodicFunction::Scale(c, f) => c * f.eval(t)?,
            PeriodicFunction::Shift(s, f) => f.eval(t + s)?,
        };
        Ok(v)
    }

    pub fn add(&self, o: &PeriodicFunction) -> PeriodicFunction {
        match (self.exact(), o.exact()) {
            (Some(a), Some(b)) => a.add(&b).into_function(),
            _ => PeriodicFunction::Sum(vec![self.clone(), o.clone()]),
        }
    }

    pub fn sub(&self, o: &PeriodicFunction) -> PeriodicFunction {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> PeriodicFunction {
        match self {
            PeriodicFunction::Trig(p) => PeriodicFunction::Trig(p.scale(c)),
            PeriodicFunction::Piecewise(p) => PeriodicFunction::Piecewise(p.scale(c)),
            _ => PeriodicFunction::Scale(c, Box::new(self.clone())),
        }
    }

    pub fn shift(&self, s: f64) -> PeriodicFunction {
        match self {
            PeriodicFunction::Trig(p) => PeriodicFunction::Trig(p.shift(s)),
            PeriodicFunction::Piecewise(p) => PeriodicFunction::Piecewise(p.shift(s)),
            _ => PeriodicFunction::Shift(s, Box::new(self.clone())),
        }
    }

    /// `t ↦ f(t+u) − 2f(t) + f(t−u)`; stays exact for exact representations.
    pub fn second_difference(&self, u: f64) -> PeriodicFunction {
        match self.exact() {
            Some(e) => e.second_difference(u).into_function(),
            None => PeriodicFunction::Sum(vec![
                self.shift(u),
                self.scale(-2.0),
                self.shift(-u),
            ]),
        }
    }

    pub fn derivative(&self, order: u32) -> Result<PeriodicFunction> {
        match self {
            PeriodicFunction::SquareWave(_) if order > 0 => Err(Error::Unsupported(
                "derivative of a square wave".into(),
            )),
            PeriodicFunction::Closure(s) if order > 0 => Err(Error::Unsupported(format!(
                "derivative of sampled function `{}`",
                s.name
            ))),
            _ => match self.exact() {
                Some(e) => Ok(e.derivative(order)?.into_function()),
                None => Err(Error::Unsupported(
                    "derivative of a composite with sampled parts".into(),
                )),
            },
        }
    }

    pub fn is_smooth(&self) -> bool {
        match self {
            PeriodicFunction::Closure(s) => s.smooth,
            _ => self.exact().is_some_and(|e| e.continuity() >= 2),
        }
    }

    /// Certified `‖f‖`.
    pub fn sup_norm(&self, tol: f64) -> Result<CertifiedValue> {
        if let Some(e) = self.exact() {
            return e.sup_norm(tol);
        }
        let lip = match self.lipschitz_hint() {
            Some(l) => l,
            None => self.estimate_lipschitz()?,
        };
        supnorm::lipschitz_abs_max(&|t| self.eval(t), lip, tol, 4_000_000)
    }

    /// User-supplied Lipschitz hints combined through composites.
    pub fn lipschitz_hint(&self) -> Option<f64> {
        match self {
            PeriodicFunction::Trig(p) => Some(p.derivative_bound(1)),
            PeriodicFunction::Closure(s) => s.lipschitz,
            PeriodicFunction::Sum(fs) => fs.iter().map(|f| f.lipschitz_hint()).sum(),
            PeriodicFunction::Scale(c, f) => f.lipschitz_hint().map(|l| l * c.abs()),
            PeriodicFunction::Shift(_, f) => f.lipschitz_hint(),
            PeriodicFunction::Piecewise(p) if p.continuity >= 0 => Some(p.first_derivative_bound()),
            _ => None,
        }
    }

    /// Default hint `2π·(estimated degree)·(sampled sup)` from a 1024-point DFT.
    pub fn estimate_lipschitz(&self) -> Result<f64> {
        let n = 1024;
        let mut buf = Vec::with_capacity(n);
        for i in 0..n {
            buf.push(Complex::new(self.eval(i as f64 / n as f64)?, 0.0));
        }
        let sup = buf.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mags: Vec<f64> = buf[..n / 2].iter().map(|z| z.norm()).collect();
        let mx = mags.iter().cloned().fold(0.0, f64::max);
        let degree = (1..n / 2)
            .rev()
            .find(|&j| mags[j] > 1e-10 * mx)
            .unwrap_or(1)
            .max(1);
        Ok(2.0 * std::f64::consts::PI * degree as f64 * sup)
    }
}

/// JSON document form, tagged by `type`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Doc {
    Trig {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Piecewise {
        knots: Vec<f64>,
        pieces: Vec<Vec<f64>>,
        #[serde(default = "jumps_allowed")]
        continuity: i32,
    },
    SquareWave {
        n: usize,
    },
    /// Serialize-only: sampled closures carry code, not data.
    Closure {
        name: String,
    },
    Sum {
        terms: Vec<Doc>,
    },
    Scale {
        factor: f64,
        function: Box<Doc>,
    },
    Shift {
        by: f64,
        function: Box<Doc>,
    },
}

fn jumps_allowed() -> i32 {
    -1
}

impl TryFrom<Doc> for PeriodicFunction {
    type Error = Error;

    fn try_from(d: Doc) -> Result<Self> {
        Ok(match d {
            Doc::Trig { constant, cos, sin } => {
                if !constant.is_finite() || cos.iter().chain(&sin).any(|c| !c.is_finite()) {
                    return Err(Error::Format("non-finite trigonometric coefficient".into()));
                }
                PeriodicFunction::Trig(TrigPoly::new(constant, cos, sin))
            }
            Doc::Piecewise {
                knots,
                pieces,
                continuity,
            } => PeriodicFunction::Piecewise(
                PiecewisePoly::new(knots, pieces, continuity)
                    .map_err(|e| Error::Format(e.to_string()))?,
            ),
            Doc::SquareWave { n } => {
                if n == 0 {
                    return Err(Error::Format("square wave needs n ≥ 1".into()));
                }
                PeriodicFunction::SquareWave(n)
            }
            Doc::Closure { name } => {
                return Err(Error::Format(format!(
                    "sampled function `{name}` cannot be loaded from a document"
                )))
            }
            Doc::Sum { terms } => PeriodicFunction::Sum(
                terms
                    .into_iter()
                    .map(PeriodicFunction::try_from)
                    .collect::<Result<_>>()?,
            ),
            Doc::Scale { factor, function } => {
                PeriodicFunction::Scale(factor, Box::new(PeriodicFunction::try_from(*function)?))
            }
            Doc::Shift { by, function } => {
                PeriodicFunction::Shift(by, Box::new(PeriodicFunction::try_from(*function)?))
            }
        })
    }
}

impl From<PeriodicFunction> for Doc {
    fn from(f: PeriodicFunction) -> Doc {
        match f {
            PeriodicFunction::Trig(p) => Doc::Trig {
                constant: p.constant,
                cos: p.cos,
                sin: p.sin,
            },
            PeriodicFunction::Piecewise(p) => Doc::Piecewise {
                knots: p.knots,
                pieces: p.pieces,
                continuity: p.continuity,
            },
            PeriodicFunction::SquareWave(n) => Doc::SquareWave { n },
            PeriodicFunction::Closure(s) => Doc::Closure { name: s.name },
            PeriodicFunction::Sum(fs) => Doc::Sum {
                terms: fs.into_iter().map(Doc::from).collect(),
            },
            PeriodicFunction::Scale(c, f) => Doc::Scale {
                factor: c,
                function: Box::new(Doc::from(*f)),
            },
            PeriodicFunction::Shift(s, f) => Doc::Shift {
                by: s,
                function: Box::new(Doc::from(*f)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(PeriodicFunction::Trig(TrigPoly::cosine(1)).eval(0.0).unwrap(), 1.0);
        assert_eq!(PeriodicFunction::SquareWave(1).eval(0.0).unwrap(), 1.0);
        assert_eq!(PeriodicFunction::constant(3.0).eval(0.7).unwrap(), 3.0);
        assert_eq!(PeriodicFunction::SquareWave(2).eval(1.0).unwrap(), 1.0);
    }

    #[test]
    fn closure_failure_propagates() {
        let f = PeriodicFunction::closure("bad", |t| if t > 0.5 { f64::NAN } else { t }, None, false);
        assert!(matches!(f.eval(0.7), Err(Error::Evaluation { .. })));
        assert!(f.eval(0.2).is_ok());
    }

    #[test]
    fn second_difference_examples() {
        let c = PeriodicFunction::constant(2.0).second_difference(0.3);
        assert!(c.sup_norm(1e-12).unwrap().hi < 1e-14);
        let f = PeriodicFunction::Trig(TrigPoly::cosine(1));
        let d = f.second_difference(0.5);
        for i in 0..20 {
            let t = i as f64 / 20.0;
            let direct = f.eval(t + 0.5).unwrap() - 2.0 * f.eval(t).unwrap() + f.eval(t - 0.5).unwrap();
            assert!((d.eval(t).unwrap() - direct).abs() < 1e-14);
            assert!((d.eval(t).unwrap() + 4.0 * f.eval(t).unwrap()).abs() < 1e-14);
        }
        assert!(f.second_difference(1.0).sup_norm(1e-12).unwrap().hi < 1e-14);
    }

    #[test]
    fn derivative_examples() {
        let f = PeriodicFunction::Trig(TrigPoly::cosine(2));
        let d2 = f.derivative(2).unwrap();
        let w = (4.0 * std::f64::consts::PI).powi(2);
        assert!((d2.eval(0.1).unwrap() + w * f.eval(0.1).unwrap()).abs() < 1e-11);
        assert!(PeriodicFunction::SquareWave(1).derivative(1).is_err());
        let s = PeriodicFunction::closure("s", |t| t, None, true);
        assert!(matches!(s.derivative(1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sup_norm_examples() {
        let z = PeriodicFunction::constant(0.0).sup_norm(1e-12).unwrap();
        assert_eq!((z.lo, z.hi), (0.0, 0.0));
        let c = PeriodicFunction::Trig(TrigPoly::cosine(3)).sup_norm(1e-12).unwrap();
        assert!(c.contains(1.0) || (c.lo - 1.0).abs() < 1e-12);
        let sq = PeriodicFunction::SquareWave(3).sup_norm(1e-12).unwrap();
        assert!(sq.contains(1.0) && sq.width() < 1e-14);
    }

    #[test]
    fn closure_sup_norm_uses_estimated_hint() {
        let f = PeriodicFunction::closure(
            "cos",
            |t| (2.0 * std::f64::consts::PI * t).cos(),
            None,
            true,
        );
        let v = f.sup_norm(1e-6).unwrap();
        assert!(v.lo <= 1.0 && v.hi >= 1.0 - 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let f = PeriodicFunction::Sum(vec![
            PeriodicFunction::Trig(TrigPoly::new(0.5, vec![1.0], vec![0.25])),
            PeriodicFunction::Scale(2.0, Box::new(PeriodicFunction::SquareWave(2))),
            PeriodicFunction::Shift(0.1, Box::new(PeriodicFunction::Piecewise(PiecewisePoly::square_wave(1)))),
        ]);
        let s = serde_json::to_string(&f).unwrap();
        let g: PeriodicFunction = serde_json::from_str(&s).unwrap();
        for i in 0..50 {
            let t = i as f64 / 50.0 + 0.003;
            assert_eq!(f.eval(t).unwrap(), g.eval(t).unwrap());
        }
        let bad = serde_json::from_str::<PeriodicFunction>(r#"{"type":"piecewise","knots":[0.5,0.2],"pieces":[[1],[2]]}"#);
        assert!(bad.is_err());
    }
}
