use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::certified::CertifiedValue;
use crate::error::{Error, Result};

pub const DEFAULT_ABS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Check parameters, ordered by name.
pub type Params = BTreeMap<String, serde_json::Value>;

/// `lhs ≤ rhs` decided on enclosures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub paper_ref: String,
    pub params: Params,
    pub lhs: CertifiedValue,
    pub rhs: CertifiedValue,
    pub margin: f64,
    pub status: Status,
}

pub fn verdict(lhs: &CertifiedValue, rhs: &CertifiedValue, abs_tol: f64) -> (f64, Status) {
    let margin = rhs.lo - lhs.hi;
    let status = if margin >= -abs_tol {
        Status::Pass
    } else if lhs.lo > rhs.hi + abs_tol {
        Status::Fail
    } else {
        Status::Inconclusive
    };
    (margin, status)
}

impl CheckReport {
    pub fn new(
        check_id: impl Into<String>,
        paper_ref: impl Into<String>,
        params: Params,
        lhs: CertifiedValue,
        rhs: CertifiedValue,
        abs_tol: f64,
    ) -> Self {
        let (margin, status) = verdict(&lhs, &rhs, abs_tol);
        CheckReport {
            check_id: check_id.into(),
            paper_ref: paper_ref.into(),
            params,
            lhs,
            rhs,
            margin,
            status,
        }
    }

    /// `fn=cos1;h=0.5;k=1`
    pub fn params_string(&self) -> String {
        let mut s = String::new();
        for (i, (k, v)) in self.params.iter().enumerate() {
            if i > 0 {
                s.push(';');
            }
            match v {
                serde_json::Value::String(x) => write!(s, "{k}={x}"),
                other => write!(s, "{k}={other}"),
            }
            .unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn of(reports: &[CheckReport]) -> Self {
        let mut s = Summary::default();
        for r in reports {
            match r.status {
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::Inconclusive => s.inconclusive += 1,
            }
        }
        s
    }

    pub fn total(&self) -> usize {
        self.pass + self.fail + self.inconclusive
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} checks: {} pass, {} fail, {} inconclusive",
            self.total(),
            self.pass,
            self.fail,
            self.inconclusive
        )
    }
}

pub fn to_json(reports: &[CheckReport]) -> Result<String> {
    serde_json::to_string_pretty(reports).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_csv<W: std::io::Write>(reports: &[CheckReport], out: W) -> Result<()> {
    let err = |e: csv::Error| Error::Format(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check_id", "params", "lhs_hi", "rhs_lo", "margin", "status"])
        .map_err(err)?;
    for r in reports {
        w.write_record([
            r.check_id.clone(),
            r.params_string(),
            format!("{:e}", r.lhs.hi),
            format!("{:e}", r.rhs.lo),
            format!("{:e}", r.margin),
            r.status.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn to_csv(reports: &[CheckReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certified::Method;

    fn cv(lo: f64, hi: f64) -> CertifiedValue {
        CertifiedValue::new(lo, hi, Method::Exact)
    }

    #[test]
    fn three_way_verdict() {
        assert_eq!(verdict(&cv(1.0, 1.0), &cv(2.0, 2.0), 1e-7).1, Status::Pass);
        assert_eq!(verdict(&cv(1.0, 1.0), &cv(1.0 - 5e-8, 1.0), 1e-7).1, Status::Pass);
        assert_eq!(verdict(&cv(3.0, 3.0), &cv(2.0, 2.0), 1e-7).1, Status::Fail);
        assert_eq!(verdict(&cv(1.0, 3.0), &cv(2.0, 2.0), 1e-7).1, Status::Inconclusive);
        // soundness: lhs.lo > rhs.hi never passes
        let (m, s) = verdict(&cv(2.0 + 1e-9, 2.5), &cv(1.0, 2.0), 1e-7);
        assert!(m < 0.0 && s != Status::Pass);
    }

    #[test]
    fn csv_layout() {
        let mut p = Params::new();
        p.insert("h".into(), 0.5.into());
        p.insert("fn".into(), "cos1".into());
        p.insert("k".into(), 1.into());
        let r = CheckReport::new("L1.w3", "W2 <= 2|f|", p, cv(1.0, 1.0), cv(2.0, 2.0), 1e-7);
        assert_eq!(r.params_string(), "fn=cos1;h=0.5;k=1");
        let s = to_csv(&[r.clone()]).unwrap();
        assert_eq!(
            s,
            "check_id,params,lhs_hi,rhs_lo,margin,status\nL1.w3,fn=cos1;h=0.5;k=1,1e0,2e0,1e0,pass\n"
        );
        let back: Vec<CheckReport> = serde_json::from_str(&to_json(&[r.clone()]).unwrap()).unwrap();
        assert_eq!(back[0], r);
    }
}
