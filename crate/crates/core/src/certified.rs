use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    GridRefine,
    Quadrature,
    Solver,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::GridRefine => "grid+refine",
            Method::Quadrature => "quadrature",
            Method::Solver => "solver",
        })
    }
}

/// Enclosure `[lo, hi]` of a real quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub lo: f64,
    pub hi: f64,
    pub method: Method,
}

impl CertifiedValue {
    pub fn new(lo: f64, hi: f64, method: Method) -> Self {
        debug_assert!(lo <= hi || (lo.is_nan() && hi.is_nan()), "bad enclosure [{lo}, {hi}]");
        CertifiedValue { lo, hi, method }
    }

    pub fn exact(v: f64) -> Self {
        CertifiedValue::new(v, v, Method::Exact)
    }

    pub fn point(v: f64, method: Method) -> Self {
        CertifiedValue::new(v, v, method)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Interval scaling (handles negative factors).
    pub fn scale(&self, c: f64) -> Self {
        let (a, b) = (self.lo * c, self.hi * c);
        CertifiedValue::new(a.min(b), a.max(b), self.method)
    }

    pub fn add(&self, other: &CertifiedValue) -> Self {
        CertifiedValue::new(
            self.lo + other.lo,
            self.hi + other.hi,
            weaker(self.method, other.method),
        )
    }

    pub fn widen(&self, r: f64) -> Self {
        CertifiedValue::new(self.lo - r, self.hi + r, self.method)
    }

    pub fn with_method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }
}

/// Provenance of a combined enclosure: the least exact ingredient wins.
pub fn weaker(a: Method, b: Method) -> Method {
    fn rank(m: Method) -> u8 {
        match m {
            Method::Exact => 0,
            Method::GridRefine => 1,
            Method::Quadrature => 2,
            Method::Solver => 3,
        }
    }
    if rank(a) >= rank(b) {
        a
    } else {
        b
    }
}

impl fmt::Display for CertifiedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12} {:.12} {:.12} {}", self.mid(), self.lo, self.hi, self.method)
    }
}
