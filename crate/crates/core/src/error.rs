use thiserror::Error;

use crate::certified::CertifiedValue;

#[derive(Debug, Error, Clone)]
pub enum Error {
    #[error("evaluation failed at t = {t}: {reason}")]
    Evaluation { t: f64, reason: String },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("tolerance {requested:e} not met; best enclosure [{}, {}]", best.lo, best.hi)]
    ToleranceNotMet {
        best: CertifiedValue,
        requested: f64,
    },
    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown check id `{0}`")]
    UnknownCheck(String),
    #[error("check `{check}` is missing parameter `{param}`")]
    MissingParam { check: String, param: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("malformed document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
