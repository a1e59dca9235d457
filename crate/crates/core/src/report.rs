//! Serializable run reports.
//!
//! Everything except the `timing` key is a deterministic function of the inputs.
//! Floats are written in shortest round-trip form, which parses back bit-exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::certify::{q_bound, Certificate, Side};
use crate::error::Result;
use crate::model::LossModel;
use crate::path::{PathResult, UniformInfo};
use crate::validate::{Selection, Task, ValidationResult};

pub const SCHEMA_VERSION: u32 = 1;

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Non-zero entries of a vector as `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub len: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn from_dense(v: &[f64]) -> Self {
        Self {
            len: v.len(),
            entries: v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, &x)| (i, x)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for &(i, x) in &self.entries {
            out[i] = x;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub lambda: f64,
    pub gap: f64,
    pub delta: f64,
    pub rho_left: Option<f64>,
    pub rho_right: Option<f64>,
    pub rho_tilde_right: Option<f64>,
    pub rho_bilateral: Option<f64>,
    pub beta: SparseVector,
    pub theta: Vec<f64>,
}

impl PointReport {
    fn new(cert: &Certificate) -> Self {
        Self {
            lambda: cert.lambda,
            gap: cert.gap,
            delta: cert.delta,
            rho_left: None,
            rho_right: None,
            rho_tilde_right: None,
            rho_bilateral: None,
            beta: SparseVector::from_dense(&cert.beta),
            theta: cert.theta.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub strategy: String,
    pub eps: f64,
    pub eps_c: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub size: usize,
    /// `None` when the bound is infinite.
    pub certified_eps: Option<f64>,
    /// Largest `min_t Gap_λ` over the scan; `None` when no scan was requested.
    pub scan_max_gap: Option<f64>,
    pub scan_points: usize,
    pub complexity_bound: Option<f64>,
    pub uniform: Option<UniformInfo>,
    pub total_epochs: usize,
    pub points: Vec<PointReport>,
}

impl PathReport {
    pub fn new(result: &PathResult, loss: &LossModel, scan_points: usize) -> Self {
        let points = result
            .certificates
            .iter()
            .zip(&result.steps)
            .map(|(c, s)| PointReport {
                rho_left: finite(s.rho_left),
                rho_right: finite(s.rho_right),
                rho_tilde_right: s.rho_tilde_right.and_then(finite),
                rho_bilateral: s.rho_bilateral.and_then(finite),
                ..PointReport::new(c)
            })
            .collect();
        let scan_max_gap = (scan_points > 0)
            .then(|| scan_max_gap(&result.certificates, result.lambda_min, result.lambda_max, scan_points, loss));
        Self {
            strategy: result.strategy.name().to_string(),
            eps: result.eps,
            eps_c: result.eps_c,
            lambda_min: result.lambda_min,
            lambda_max: result.lambda_max,
            size: result.size(),
            certified_eps: finite(result.certified_eps),
            scan_max_gap,
            scan_points,
            complexity_bound: result.complexity_bound.and_then(finite),
            uniform: result.uniform,
            total_epochs: result.total_epochs,
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPointReport {
    pub lambda: f64,
    pub error: f64,
    pub tolerance: f64,
    pub interval: (f64, f64),
    pub certified: bool,
    pub gap: f64,
    pub beta: SparseVector,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub eps_v: f64,
    /// Ladder multiplier of the reference spread that produced `eps_v`.
    pub multiplier: Option<f64>,
    pub task: Task,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub all_certified: bool,
    pub covers_range: bool,
    pub selection: Option<Selection>,
    pub total_epochs: usize,
    pub points: Vec<ValidationPointReport>,
}

impl ValidationReport {
    pub fn new(result: &ValidationResult, multiplier: Option<f64>) -> Self {
        Self {
            eps_v: result.eps_v,
            multiplier,
            task: result.task,
            lambda_min: result.lambda_min,
            lambda_max: result.lambda_max,
            all_certified: result.all_certified(),
            covers_range: result.covers_range(),
            selection: crate::validate::select_best(result),
            total_epochs: result.total_epochs,
            points: result
                .points
                .iter()
                .map(|p| ValidationPointReport {
                    lambda: p.lambda,
                    error: p.error,
                    tolerance: p.tolerance,
                    interval: p.interval,
                    certified: p.certified,
                    gap: p.certificate.gap,
                    beta: SparseVector::from_dense(&p.certificate.beta),
                    theta: p.certificate.theta.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedStrategy {
    pub strategy: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub default_size: usize,
    pub decades: f64,
    /// Certified error of the default grid, used as `ε` for the other strategies.
    pub default_eps: Option<f64>,
    pub skipped: Vec<SkippedStrategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_validation: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_secs: f64,
    /// One entry per element of `paths`.
    pub paths_secs: Vec<f64>,
    /// One entry per element of `validation`.
    pub validation_secs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub dataset: DatasetInfo,
    pub paths: Vec<PathReport>,
    pub bench: Option<BenchSummary>,
    pub validation: Vec<ValidationReport>,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(command: &str, config: serde_json::Value, dataset: DatasetInfo) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            dataset,
            paths: Vec::new(),
            bench: None,
            validation: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// JSON without the `timing` key.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("timing");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json()?.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

/// `count` geometrically spaced values from `hi` down to `lo`.
pub fn geometric_scan(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![hi],
        _ => {
            let step = (lo / hi).ln() / (count - 1) as f64;
            (0..count)
                .map(|k| if k + 1 == count { lo } else { hi * (step * k as f64).exp() })
                .collect()
        }
    }
}

/// `max_λ min_t Gap_λ(β_t, θ_t)` over a geometric scan of `[lo, hi]`.
pub fn scan_max_gap(certs: &[Certificate], lo: f64, hi: f64, count: usize, loss: &LossModel) -> f64 {
    geometric_scan(lo, hi, count)
        .into_iter()
        .map(|l| certs.iter().map(|c| c.gap_at(l, loss)).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One row of plot data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCurveRow {
    pub lambda: f64,
    pub gap_bound_upper: f64,
    pub gap_bound_lower: f64,
    pub gap_actual: f64,
}

/// Gap bounds and actual gap at each scan value, taken from whichever of the two
/// bracketing grid points has the smaller upper bound.
pub fn gap_curve(certs: &[Certificate], lo: f64, hi: f64, count: usize, loss: &LossModel) -> Vec<GapCurveRow> {
    let row = |c: &Certificate, lambda: f64| {
        let rho = 1.0 - lambda / c.lambda;
        GapCurveRow {
            lambda,
            gap_bound_upper: q_bound(c, rho, Side::Upper, loss),
            gap_bound_lower: q_bound(c, rho, Side::Lower, loss),
            gap_actual: c.gap_at(lambda, loss),
        }
    };
    geometric_scan(lo, hi, count)
        .into_iter()
        .filter_map(|lambda| {
            // certificates are ordered by decreasing λ
            let below = certs.iter().position(|c| c.lambda <= lambda);
            let candidates: Vec<&Certificate> = match below {
                Some(0) => vec![&certs[0]],
                Some(k) => vec![&certs[k - 1], &certs[k]],
                None => certs.last().into_iter().collect(),
            };
            candidates
                .into_iter()
                .map(|c| row(c, lambda))
                .min_by(|a, b| a.gap_bound_upper.total_cmp(&b.gap_bound_upper))
        })
        .collect()
}

pub fn write_gap_curve(path: &Path, rows: &[GapCurveRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        writer.serialize(r).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> crate::error::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => std::io::Error::other(format!("{other:?}")).into(),
    }
}
