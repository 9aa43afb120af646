//! Test functions: the builtin corpus and JSON corpus files.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal;
use crate::function::PeriodicFunction;
use crate::piecewise::PiecewisePoly;
use crate::trig::TrigPoly;

/// Seed of the `randpoly6` builtin (independent of the run seed).
const RANDPOLY_SEED: u64 = 6;

pub const BUILTINS: [&str; 10] = [
    "zero", "const", "cos1", "cos2", "cos3", "cos4", "randpoly6", "abssin12", "pwquad", "phi40",
];

/// Grid overrides for one corpus function; absent fields keep the registry defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
}

impl ParamOverrides {
    fn validate(&self) -> Result<()> {
        let bad = |what: &str, msg: &str| Err(Error::Format(format!("params.{what}: {msg}")));
        if let Some(h) = &self.h {
            if h.is_empty() || h.iter().any(|&h| !(h > 0.0 && h <= 1.0)) {
                return bad("h", "values must lie in (0, 1]");
            }
        }
        if let Some(k) = &self.k {
            if k.is_empty() || k.iter().any(|&k| k == 0 || k > 5) {
                return bad("k", "orders must lie in 1..=5 (products reach 25 > 20 otherwise)");
            }
        }
        if let Some(n) = &self.n {
            if n.is_empty() || n.iter().any(|&n| n == 0 || n > 64) {
                return bad("n", "values must lie in 1..=64");
            }
        }
        if let Some(a) = &self.alpha {
            if a.is_empty() || a.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                return bad("alpha", "values must be > 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub function: PeriodicFunction,
    pub params: ParamOverrides,
}

impl CorpusEntry {
    pub fn new(name: impl Into<String>, function: PeriodicFunction) -> Self {
        CorpusEntry {
            name: name.into(),
            function,
            params: ParamOverrides::default(),
        }
    }
}

/// Coefficients uniform in `[−1, 1]`, no constant term dropped.
pub fn random_trig(rng: &mut impl Rng, degree: usize) -> TrigPoly {
    let constant = rng.gen_range(-1.0..=1.0);
    let cos = (0..degree).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let sin = (0..degree).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    TrigPoly::new(constant, cos, sin)
}

/// Fourier partial sum of `|sin 2πt|` up to degree `2m`.
fn abs_sin(degree: usize) -> TrigPoly {
    let mut cos = vec![0.0; degree];
    for m in 1..=degree / 2 {
        cos[2 * m - 1] = -4.0 / (PI * (4 * m * m - 1) as f64);
    }
    TrigPoly::new(2.0 / PI, cos, vec![0.0; degree])
}

/// `8t(1/2 − t)` on `[0, 1/2]`, `8(t − 1/2)(t − 1)` on `[1/2, 1]`: C¹ but not C².
fn pw_quad() -> PiecewisePoly {
    PiecewisePoly::new(
        vec![0.0, 0.5],
        vec![vec![0.0, 4.0, -8.0], vec![0.0, -4.0, 8.0]],
        1,
    )
    .expect("valid piecewise quadratic")
}

pub fn builtin(name: &str) -> Result<PeriodicFunction> {
    Ok(match name {
        "zero" => PeriodicFunction::constant(0.0),
        "const" => PeriodicFunction::constant(1.5),
        "cos1" | "cos2" | "cos3" | "cos4" => {
            PeriodicFunction::Trig(TrigPoly::cosine(name[3..].parse().unwrap()))
        }
        "randpoly6" => {
            let mut rng = ChaCha8Rng::seed_from_u64(RANDPOLY_SEED);
            PeriodicFunction::Trig(random_trig(&mut rng, 6))
        }
        "abssin12" => PeriodicFunction::Trig(abs_sin(12)),
        "pwquad" => PeriodicFunction::Piecewise(pw_quad()),
        "phi40" => extremal::phi_partial(1, 40)?.as_function(),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown builtin `{name}` (expected one of {})",
                BUILTINS.join(", ")
            )))
        }
    })
}

pub fn default_corpus() -> Vec<CorpusEntry> {
    BUILTINS
        .iter()
        .map(|&n| CorpusEntry::new(n, builtin(n).expect("builtin")))
        .collect()
}

/// A corpus file is a JSON array whose entries are function documents, `{"builtin": NAME}`,
/// or `{"name", "function", "params"}` wrappers around either.
/// Errors carry `line L, column C` and the JSON path of the offending field.
pub fn parse_corpus(json: &str) -> Result<Vec<CorpusEntry>> {
    let raw: Vec<serde_json::Value> = {
        let de = &mut serde_json::Deserializer::from_str(json);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            Error::Format(format!(
                "line {}, column {}: at `{}`: {}",
                inner.line(),
                inner.column(),
                e.path(),
                inner
            ))
        })?
    };
    if raw.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let lines = entry_lines(json);
    let mut out = Vec::with_capacity(raw.len());
    for (i, value) in raw.into_iter().enumerate() {
        let line = lines.get(i).copied().unwrap_or(1);
        let at = |msg: String| Error::Format(format!("line {line}: entry [{i}]: {msg}"));
        let entry = entry_from_value(i, value).map_err(|e| match e {
            Error::Format(m) => at(m),
            other => at(other.to_string()),
        })?;
        out.push(entry);
    }
    Ok(out)
}

/// A single function document (or `{"builtin": NAME}`), with the same diagnostics as a corpus.
pub fn parse_function(json: &str) -> Result<PeriodicFunction> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| {
        Error::Format(format!("line {}, column {}: {}", e.line(), e.column(), e))
    })?;
    function_from_value(value)
}

fn entry_from_value(i: usize, value: serde_json::Value) -> Result<CorpusEntry> {
    // decode the function field first so a bad field is named precisely
    if let Some(obj) = value.as_object() {
        if let Some(f) = obj.get("function") {
            let function = function_from_value(f.clone()).map_err(|e| match e {
                Error::Format(m) => Error::Format(format!("field `function`: {m}")),
                other => other,
            })?;
            let params: ParamOverrides = match obj.get("params") {
                Some(p) => {
                    serde_json::from_value(p.clone()).map_err(|e| Error::Format(format!("field `params`: {e}")))?
                }
                None => ParamOverrides::default(),
            };
            params.validate()?;
            if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "name" | "function" | "params")) {
                return Err(Error::Format(format!("unknown field `{k}`")));
            }
            let name = match obj.get("name") {
                None => format!("f{i}"),
                Some(serde_json::Value::String(s)) if !s.is_empty() => s.clone(),
                Some(_) => return Err(Error::Format("field `name`: expected a nonempty string".into())),
            };
            return Ok(CorpusEntry {
                name,
                function,
                params,
            });
        }
    }
    let name = match value.get("builtin").and_then(|b| b.as_str()) {
        Some(b) => b.to_string(),
        None => format!("f{i}"),
    };
    let function = function_from_value(value)?;
    Ok(CorpusEntry::new(name, function))
}

fn function_from_value(v: serde_json::Value) -> Result<PeriodicFunction> {
    if let Some(b) = v.get("builtin") {
        let name = b
            .as_str()
            .ok_or_else(|| Error::Format("field `builtin`: expected a string".into()))?;
        return builtin(name).map_err(|e| Error::Format(format!("field `builtin`: {e}")));
    }
    if v.get("type").is_none() {
        return Err(Error::Format("missing field `type` (or `builtin`)".into()));
    }
    serde_path_to_error::deserialize::<_, PeriodicFunction>(v).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Error::Format(e.into_inner().to_string())
        } else {
            Error::Format(format!("field `{path}`: {}", e.into_inner()))
        }
    })
}

/// Line of the start of each top-level array element.
fn entry_lines(json: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut depth, mut line) = (0i32, 1usize);
    let (mut in_str, mut escaped, mut expecting) = (false, false, false);
    for c in json.chars() {
        if c == '\n' {
            line += 1;
        }
        if in_str {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_str = false,
                _ => {}
            }
            continue;
        }
        if expecting && !c.is_whitespace() && c != ']' {
            out.push(line);
            expecting = false;
        }
        match c {
            '"' => in_str = true,
            '[' | '{' => {
                depth += 1;
                if depth == 1 && c == '[' {
                    expecting = true;
                }
            }
            ']' | '}' => depth -= 1,
            ',' if depth == 1 => expecting = true,
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        let c = default_corpus();
        assert_eq!(c.len(), 10);
        let abs = builtin("abssin12").unwrap();
        // the tail Σ_{m>6} 4/(π(4m²−1)) is below 0.05
        for i in 0..50 {
            let t = i as f64 / 50.0;
            assert!((abs.eval(t).unwrap() - (2.0 * PI * t).sin().abs()).abs() < 0.05);
        }
        let pw = builtin("pwquad").unwrap();
        assert!(!pw.is_smooth());
        assert!((pw.eval(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(builtin("nope").is_err());
    }

    #[test]
    fn corpus_documents() {
        let json = r#"[
  {"type": "trig", "constant": 1.0, "cos": [0.5]},
  {"builtin": "cos2"},
  {"name": "sq", "function": {"type": "square_wave", "n": 1}, "params": {"h": [0.25]}}
]"#;
        let c = parse_corpus(json).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].name, "f0");
        assert_eq!(c[1].name, "cos2");
        assert_eq!(c[2].name, "sq");
        assert_eq!(c[2].params.h, Some(vec![0.25]));
    }

    #[test]
    fn corpus_diagnostics() {
        let syntax = parse_corpus("[\n  {\"type\": \"trig\",\n   \"cos\": [1.0,]}\n]").unwrap_err();
        assert!(syntax.to_string().contains("line 3"), "{syntax}");

        let field = parse_corpus("[\n {\"builtin\": \"cos1\"},\n {\"type\": \"trig\", \"cos\": [\"x\"]}\n]").unwrap_err();
        let msg = field.to_string();
        assert!(msg.contains("line 3") && msg.contains("entry [1]") && msg.contains("f64"), "{msg}");

        let params = parse_corpus(r#"[{"function": {"builtin": "cos1"}, "params": {"h": [2.0]}}]"#).unwrap_err();
        assert!(params.to_string().contains("params.h"), "{params}");

        assert!(matches!(parse_corpus("[]"), Err(Error::EmptyCorpus)));
        assert!(parse_function(r#"{"builtin": "cos3"}"#).is_ok());
        assert!(parse_function("{\n\"type\": ").unwrap_err().to_string().contains("line 2"));
        assert!(parse_corpus(r#"[{"cos": [1]}]"#).unwrap_err().to_string().contains("type"));
    }
}
