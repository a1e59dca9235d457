use thiserror::Error;

use crate::certify::Certificate;
use crate::path::PathResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dual point is outside the domain of the conjugate ({0})")]
    InfeasibleDual(&'static str),

    #[error("the loss does not provide the {0} modulus needed here")]
    ModulusUnavailable(&'static str),

    #[error("solver stopped after {epochs} epochs with gap {:.3e} (target {target:.3e})", best.gap)]
    MaxEpochsExceeded {
        epochs: usize,
        target: f64,
        best: Box<Certificate>,
    },

    #[error("path construction interrupted after {} points: {cause}", partial.certificates.len())]
    PathInterrupted {
        partial: Box<PathResult>,
        cause: Box<Error>,
    },

    #[error("classification labels must be in {{-1, +1}} or {{0, 1}}, found {0}")]
    LabelDomain(f64),

    #[error("every validation row is zero")]
    AllRowsZero,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
