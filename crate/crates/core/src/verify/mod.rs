//! Numerical verification of the inequalities relating the moduli, K-functionals and best
//! approximation: a registry of checks, suites over a corpus, and JSON/CSV reports.

pub mod corpus;
pub mod registry;
pub mod report;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::PeriodicFunction;

pub use corpus::{builtin, default_corpus, parse_corpus, parse_function, CorpusEntry, ParamOverrides};
pub use registry::{c_alpha, grids, jackson_constant, lookup, summary_table, CheckSpec, Config, Verifier, REGISTRY};
pub use report::{CheckReport, Params, Status, Summary, DEFAULT_ABS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma1,
    Lemma2,
    Theorem1,
    Theorem2,
    Theorem3,
    Jackson,
    Bernstein,
    Kfun,
    Sharpness,
    All,
}

impl Suite {
    /// Every suite except `All`, in run order.
    pub const ALL_SUITES: [Suite; 9] = [
        Suite::Lemma1,
        Suite::Lemma2,
        Suite::Theorem1,
        Suite::Theorem2,
        Suite::Theorem3,
        Suite::Jackson,
        Suite::Bernstein,
        Suite::Kfun,
        Suite::Sharpness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Theorem3 => "theorem3",
            Suite::Jackson => "jackson",
            Suite::Bernstein => "bernstein",
            Suite::Kfun => "kfun",
            Suite::Sharpness => "sharpness",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL_SUITES
            .iter()
            .chain(std::iter::once(&Suite::All))
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

/// Run one check on `f`; `params` holds the check's parameters (see [`REGISTRY`]).
pub fn run_check(id: &str, f: &PeriodicFunction, params: &Params) -> Result<CheckReport> {
    let mut v = Verifier::new(Config::default());
    v.register("f", f)?;
    let mut p = params.clone();
    p.insert("fn".into(), "f".into());
    v.run(id, &p)
}

pub fn run_suite(suite: Suite, corpus: &[CorpusEntry], config: &Config) -> Result<Vec<CheckReport>> {
    Verifier::new(*config).run_suite(suite, corpus)
}

/// The α at which `2(1 + 3/(2α²)) = sec(1/α) + tan(1/α)` on `(2/π, 2)`; below it the
/// B-spline Jackson constant `2c(α)` is the smaller one.
pub fn crossover_alpha() -> f64 {
    let g = |a: f64| 2.0 * c_alpha(a) - jackson_constant(a);
    // g > 0 near 2/π is false (sec blows up), g(2) > 0
    let (mut lo, mut hi) = (2.0 / PI + 1e-9, 2.0);
    debug_assert!(g(lo) < 0.0 && g(hi) > 0.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
