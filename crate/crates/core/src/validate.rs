//! Hyperparameter selection on a held-out set with a guarantee on the validation error.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{q_bound, Certificate, Side};
use crate::error::{Error, Result};
use crate::linalg::{l2_norm, Design};
use crate::model::{LossModel, RegularizerKind, RegularizerModel};
use crate::path::{largest_step, RIGHT_STEP_CAP};
use crate::solve::{lambda_max, CoordinateDescent, SolverConfig};

const OPERATOR_NORM_TOL: f64 = 1e-8;
const OPERATOR_NORM_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// `‖y' − X'β‖₂`
    Regression,
    /// Fraction of non-positive margins `y'_i·(X'β)_i`.
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub eps_v: f64,
    pub task: Task,
    /// Constant strong-convexity modulus of `P_λ`; `None` uses `λγ` from the Elastic Net.
    pub mu: Option<f64>,
    /// `None` uses `‖Xᵀ∇f(0)‖_∞`.
    pub lambda_max: Option<f64>,
    pub lambda_min_ratio: f64,
    /// Inner solver tolerance as a fraction of the validation tolerance.
    pub solver_ratio: f64,
    /// Lower bound on the first solver target at each point; `None` means `1e-6·(1 + f(0))`.
    pub min_tolerance: Option<f64>,
    pub root_tol: f64,
    pub max_points: usize,
    /// Re-solves allowed per point while the classification tolerance shrinks.
    pub max_refinements: usize,
}

impl ValidationConfig {
    pub fn new(eps_v: f64, task: Task, lambda_min_ratio: f64) -> Self {
        Self {
            eps_v,
            task,
            mu: None,
            lambda_max: None,
            lambda_min_ratio,
            solver_ratio: 0.1,
            min_tolerance: None,
            root_tol: 1e-10,
            max_points: 100_000,
            max_refinements: 20,
        }
    }

    pub fn validate(&self, n_val: usize, reg: &RegularizerModel) -> Result<()> {
        if !(self.eps_v > 0.0 && self.eps_v.is_finite()) {
            return Err(Error::InvalidConfig(format!("eps_v must be positive, got {}", self.eps_v)));
        }
        if self.task == Task::Classification && order_index(n_val, self.eps_v) >= n_val {
            return Err(Error::InvalidConfig(format!(
                "⌊n'·eps_v⌋ + 1 must not exceed n' = {n_val} (eps_v = {})",
                self.eps_v
            )));
        }
        match (self.mu, reg.kind) {
            (Some(mu), _) if !(mu > 0.0 && mu.is_finite()) => {
                return Err(Error::InvalidConfig(format!("mu must be positive, got {mu}")))
            }
            (None, RegularizerKind::L1) => {
                return Err(Error::InvalidConfig(
                    "the l1 penalty is not strongly convex: use elastic net or supply mu".into(),
                ))
            }
            _ => {}
        }
        if !(self.lambda_min_ratio >= 1.0 && self.lambda_min_ratio.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda_min_ratio must be ≥ 1, got {}",
                self.lambda_min_ratio
            )));
        }
        if !(self.solver_ratio > 0.0 && self.solver_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "solver_ratio must be in (0, 1], got {}",
                self.solver_ratio
            )));
        }
        if let Some(t) = self.min_tolerance {
            if !(t > 0.0) {
                return Err(Error::InvalidConfig(format!("min_tolerance must be positive, got {t}")));
            }
        }
        if self.max_points == 0 {
            return Err(Error::InvalidConfig("max_points must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Zero-based position `⌊n'·ε_v⌋` of the order statistic.
fn order_index(n_val: usize, eps_v: f64) -> usize {
    (n_val as f64 * eps_v).floor() as usize
}

/// Validation error of `β` on `(X', y')`; classification labels may be `{0, 1}` or `{−1, +1}`.
pub fn validation_error(beta: &[f64], x_val: &Design, y_val: &[f64], task: Task) -> Result<f64> {
    if x_val.n_cols() != beta.len() || x_val.n_rows() != y_val.len() {
        return Err(Error::DimensionMismatch(format!(
            "validation design {}×{}, β has {} entries, y' has {}",
            x_val.n_rows(),
            x_val.n_cols(),
            beta.len(),
            y_val.len()
        )));
    }
    let pred = x_val.matvec(beta);
    match task {
        Task::Regression => Ok(pred
            .iter()
            .zip(y_val)
            .map(|(p, y)| (y - p) * (y - p))
            .sum::<f64>()
            .sqrt()),
        Task::Classification => {
            let signs = signed_labels(y_val)?;
            let wrong = pred.iter().zip(&signs).filter(|(p, s)| *p * *s <= 0.0).count();
            Ok(wrong as f64 / y_val.len().max(1) as f64)
        }
    }
}

/// Maps `{0, 1}` labels to `{−1, +1}`; `{−1, +1}` pass through.
pub fn signed_labels(y: &[f64]) -> Result<Vec<f64>> {
    let has_zero = y.iter().any(|&v| v == 0.0);
    y.iter()
        .map(|&v| match v {
            v if v == 1.0 => Ok(1.0),
            v if v == 0.0 => Ok(-1.0),
            v if v == -1.0 && !has_zero => Ok(-1.0),
            v => Err(Error::LabelDomain(v)),
        })
        .collect()
}

/// `sqrt(2·gap/μ)`
pub fn safe_radius(gap: f64, mu: f64) -> f64 {
    (2.0 * gap.max(0.0) / mu).sqrt()
}

/// `(μ/2)(ε_v/‖X'‖₂)²`
pub fn regression_tolerance(mu: f64, eps_v: f64, operator_norm: f64) -> f64 {
    if operator_norm == 0.0 {
        return f64::INFINITY;
    }
    let r = eps_v / operator_norm;
    0.5 * mu * r * r
}

/// `(μ/2)·ξ_(⌊n'ε_v⌋+1)` with `ξ_i = (x'_iᵀβ/‖x'_i‖)²` over the non-zero rows.
///
/// `row_norms` are the row norms of `X'`; the index is clamped to the number of non-zero rows.
pub fn classification_tolerance(beta: &[f64], x_val: &Design, row_norms: &[f64], eps_v: f64, mu: f64) -> Result<f64> {
    let pred = x_val.matvec(beta);
    let mut xi: Vec<f64> = pred
        .iter()
        .zip(row_norms)
        .filter(|(_, &n)| n > 0.0)
        .map(|(p, n)| (p / n) * (p / n))
        .collect();
    if xi.is_empty() {
        return Err(Error::AllRowsZero);
    }
    let k = order_index(x_val.n_rows(), eps_v).min(xi.len() - 1);
    let (_, kth, _) = xi.select_nth_unstable_by(k, f64::total_cmp);
    Ok(0.5 * mu * *kth)
}

/// Tolerance `ε_{v,μ}` on the training duality gap that keeps the validation error within `ε_v`.
#[derive(Debug, Clone)]
pub struct ToleranceMap<'a> {
    x_val: &'a Design,
    task: Task,
    eps_v: f64,
    operator_norm: f64,
    row_norms: Vec<f64>,
}

impl<'a> ToleranceMap<'a> {
    pub fn new(x_val: &'a Design, task: Task, eps_v: f64) -> Result<Self> {
        let row_norms: Vec<f64> = x_val.row_sq_norms().into_iter().map(f64::sqrt).collect();
        if row_norms.iter().all(|&n| n == 0.0) {
            return Err(Error::AllRowsZero);
        }
        let operator_norm = match task {
            Task::Regression => x_val.spectral_norm(OPERATOR_NORM_TOL, OPERATOR_NORM_ITER),
            Task::Classification => 0.0,
        };
        Ok(Self {
            x_val,
            task,
            eps_v,
            operator_norm,
            row_norms,
        })
    }

    pub fn operator_norm(&self) -> f64 {
        self.operator_norm
    }

    pub fn epsilon_v_mu(&self, beta: &[f64], mu: f64) -> Result<f64> {
        match self.task {
            Task::Regression => Ok(regression_tolerance(mu, self.eps_v, self.operator_norm)),
            Task::Classification => classification_tolerance(beta, self.x_val, &self.row_norms, self.eps_v, mu),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub lambda: f64,
    pub error: f64,
    /// `ε_{v,μ}` at this point.
    pub tolerance: f64,
    /// `[λ_t(1 − ρ^ℓ), λ_t(1 + ρ^r)]`
    pub interval: (f64, f64),
    /// The gap is below the tolerance, so the guarantee holds on this interval.
    pub certified: bool,
    pub certificate: Certificate,
}

#[derive(Debug, Clone)]
pub struct ValidationResult {
    pub eps_v: f64,
    pub task: Task,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Ordered by decreasing `λ`.
    pub points: Vec<ValidationPoint>,
    pub total_epochs: usize,
    pub wall_time_secs: f64,
}

impl ValidationResult {
    pub fn all_certified(&self) -> bool {
        self.points.iter().all(|p| p.certified)
    }

    /// Whether the intervals cover `[λmin, λmax]` without holes.
    pub fn covers_range(&self) -> bool {
        let mut intervals: Vec<(f64, f64)> = self.points.iter().map(|p| p.interval).collect();
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut reach = self.lambda_min;
        for (lo, hi) in intervals {
            if lo > reach {
                return false;
            }
            reach = reach.max(hi);
        }
        reach >= self.lambda_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub lambda: f64,
    pub error: f64,
    /// `error − ε_v`, a lower bound on the best exact validation error when certified.
    pub lower_bound: f64,
    pub certified: bool,
}

/// Grid point with the smallest validation error; ties go to the smaller `λ`.
pub fn select_best(result: &ValidationResult) -> Option<Selection> {
    let mut best: Option<(usize, &ValidationPoint)> = None;
    for (i, p) in result.points.iter().enumerate() {
        best = match best {
            None => Some((i, p)),
            Some((_, b)) if p.error < b.error || (p.error == b.error && p.lambda < b.lambda) => Some((i, p)),
            keep => keep,
        };
    }
    best.map(|(index, p)| Selection {
        index,
        lambda: p.lambda,
        error: p.error,
        lower_bound: p.error - result.eps_v,
        certified: result.all_certified(),
    })
}

/// Walks `[λmin, λmax]` from the top, solving each point just accurately enough that
/// its validation error is within `ε_v` of the exact one on its interval.
#[allow(clippy::too_many_arguments)]
pub fn validation_path(
    x: &Design,
    loss: &LossModel,
    reg: &RegularizerModel,
    x_val: &Design,
    y_val: &[f64],
    cfg: &ValidationConfig,
    solver: &SolverConfig,
) -> Result<ValidationResult> {
    let started = Instant::now();
    cfg.validate(x_val.n_rows(), reg)?;
    if x_val.n_cols() != x.n_cols() || x_val.n_rows() != y_val.len() {
        return Err(Error::DimensionMismatch(format!(
            "training has {} features, validation design {}×{} with {} labels",
            x.n_cols(),
            x_val.n_rows(),
            x_val.n_cols(),
            y_val.len()
        )));
    }
    if cfg.task == Task::Classification {
        signed_labels(y_val)?;
    }
    let lmax = cfg.lambda_max.unwrap_or_else(|| lambda_max(x, loss));
    if !(lmax > 0.0 && lmax.is_finite()) {
        return Err(Error::InvalidConfig(format!("λmax = {lmax} is not a usable upper end")));
    }
    let lmin = lmax / cfg.lambda_min_ratio;
    let floor = cfg.min_tolerance.unwrap_or(1e-6 * loss.scale());
    let mu_at = |lambda: f64| cfg.mu.unwrap_or_else(|| reg.strong_convexity(lambda));
    let scales_with_lambda = cfg.mu.is_none();
    let tolerances = ToleranceMap::new(x_val, cfg.task, cfg.eps_v)?;
    let cd = CoordinateDescent::new(x, loss, reg)?;

    let mut points: Vec<ValidationPoint> = Vec::new();
    let mut total_epochs = 0;
    let mut guess = floor;
    let mut lambda = lmax;
    loop {
        if points.len() >= cfg.max_points {
            return Err(Error::InvalidConfig(format!(
                "validation path needs more than {} points",
                cfg.max_points
            )));
        }
        let mu = mu_at(lambda);
        let mut warm = points.last().map(|p| p.certificate.beta.clone());
        let mut solve_tol = cfg.solver_ratio * guess.max(floor);
        let mut refinements = 0;
        let (cert, tolerance) = loop {
            let cfg_inner = SolverConfig {
                eps_c: solve_tol,
                enforce_delta: false,
                ..*solver
            };
            let (out, stalled) = match cd.fit(lambda, warm.as_deref(), &cfg_inner) {
                Ok(out) => {
                    total_epochs += out.epochs;
                    (out.certificate, false)
                }
                Err(Error::MaxEpochsExceeded { epochs, best, .. }) => {
                    total_epochs += epochs;
                    (*best, true)
                }
                Err(e) => return Err(e),
            };
            let tolerance = tolerances.epsilon_v_mu(&out.beta, mu)?;
            let wanted = cfg.solver_ratio * tolerance;
            if out.gap <= wanted || stalled || refinements >= cfg.max_refinements {
                break (out, tolerance);
            }
            refinements += 1;
            // the floor bounds the first target only; refinements chase the tolerance itself
            solve_tol = wanted.min(solve_tol * cfg.solver_ratio).max(f64::MIN_POSITIVE);
            warm = Some(out.beta);
        };
        let certified = cert.gap < tolerance;
        let threshold = if certified {
            tolerance
        } else {
            tolerance.max(floor).max(cert.gap / cfg.solver_ratio)
        };
        // μ(λ) = λγ, so the tolerance at λ_t(1 − ρ) is (1 − ρ) times the one at λ_t
        let scale = |rho: f64| if scales_with_lambda { threshold * (1.0 - rho) } else { threshold };
        let rho_left = largest_step(
            |r| q_bound(&cert, r, Side::Upper, loss),
            scale,
            1.0,
            cfg.root_tol,
        );
        let rho_right = largest_step(
            |r| q_bound(&cert, -r, Side::Upper, loss),
            |r| scale(-r),
            RIGHT_STEP_CAP,
            cfg.root_tol,
        );
        let error = validation_error(&cert.beta, x_val, y_val, cfg.task)?;
        points.push(ValidationPoint {
            lambda,
            error,
            tolerance,
            interval: (lambda * (1.0 - rho_left), lambda * (1.0 + rho_right)),
            certified,
            certificate: cert,
        });
        guess = tolerance;
        if lambda <= lmin {
            break;
        }
        let next = lambda * (1.0 - rho_left);
        if !(next < lambda) {
            return Err(Error::InvalidConfig(format!(
                "validation step vanished at λ = {lambda}; the tolerance is below attainable precision"
            )));
        }
        lambda = next.max(lmin);
    }
    Ok(ValidationResult {
        eps_v: cfg.eps_v,
        task: cfg.task,
        lambda_min: lmin,
        lambda_max: lmax,
        points,
        total_epochs,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Euclidean distance helper for containment checks.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_norm(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn dense(rows: &[Vec<f64>]) -> Design {
        DenseMatrix::from_rows(rows).unwrap().into()
    }

    #[test]
    fn validation_error_examples() {
        let x = dense(&[vec![1.0], vec![-1.0], vec![-1.0]]);
        assert_eq!(validation_error(&[1.0], &x, &[1.0, -1.0, -1.0], Task::Regression).unwrap(), 0.0);
        assert_eq!(validation_error(&[1.0], &x, &[1.0, -1.0, -1.0], Task::Classification).unwrap(), 0.0);
        let e = validation_error(&[1.0], &x, &[1.0, -1.0, 1.0], Task::Classification).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-15);
        // 0/1 labels map to ∓1
        let e = validation_error(&[1.0], &x, &[1.0, 0.0, 1.0], Task::Classification).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            validation_error(&[1.0], &x, &[2.0, 0.0, 1.0], Task::Classification),
            Err(Error::LabelDomain(_))
        ));
        assert!(validation_error(&[1.0, 2.0], &x, &[1.0, 0.0, 1.0], Task::Regression).is_err());
    }

    #[test]
    fn zero_margin_counts_as_error() {
        let x = dense(&[vec![1.0], vec![1.0]]);
        assert_eq!(validation_error(&[0.0], &x, &[1.0, -1.0], Task::Classification).unwrap(), 1.0);
    }

    #[test]
    fn safe_radius_examples() {
        assert!((safe_radius(0.02, 1.0) - 0.2).abs() < 1e-15);
        assert_eq!(safe_radius(0.0, 3.0), 0.0);
    }

    #[test]
    fn tolerance_examples() {
        assert!((regression_tolerance(1.0, 0.1, 10.0) - 5e-5).abs() < 1e-18);
        assert!(regression_tolerance(1.0, 1e-300, 10.0) < 1e-300);

        // ξ = {0.09, 0.25, 0.49, 0.81}: rows (m_i, 0) have unit norm after scaling by 1/m_i
        let x = dense(&[vec![0.3, 0.0], vec![-0.5, 0.0], vec![0.7, 0.0], vec![0.9, 0.0]]);
        let t = classification_tolerance(&[1.0, 0.0], &x, &[1.0; 4], 0.25, 2.0).unwrap();
        assert!((t - 0.25).abs() < 1e-15, "{t}");
    }

    #[test]
    fn zero_rows_are_skipped() {
        let x = dense(&[vec![0.0, 0.0], vec![3.0, 4.0]]);
        let norms: Vec<f64> = x.row_sq_norms().into_iter().map(f64::sqrt).collect();
        let t = classification_tolerance(&[1.0, 0.0], &x, &norms, 0.1, 2.0).unwrap();
        assert!((t - 9.0 / 25.0).abs() < 1e-15);
        let zero = dense(&[vec![0.0], vec![0.0]]);
        assert!(matches!(ToleranceMap::new(&zero, Task::Classification, 0.1), Err(Error::AllRowsZero)));
    }

    #[test]
    fn selection_prefers_smaller_lambda_on_ties() {
        let cert = Certificate {
            lambda: 1.0,
            beta: vec![],
            theta: vec![],
            zeta: vec![],
            gap: 0.0,
            delta: 0.0,
            f_val: 0.0,
            zeta_norm: 0.0,
            reg_sum: 0.0,
        };
        let point = |lambda: f64, error: f64| ValidationPoint {
            lambda,
            error,
            tolerance: 1.0,
            interval: (lambda, lambda),
            certified: true,
            certificate: cert.clone(),
        };
        let mut result = ValidationResult {
            eps_v: 0.1,
            task: Task::Regression,
            lambda_min: 0.5,
            lambda_max: 1.0,
            points: vec![point(1.0, 0.3)],
            total_epochs: 0,
            wall_time_secs: 0.0,
        };
        assert_eq!(select_best(&result).unwrap().index, 0);
        result.points.push(point(0.5, 0.3));
        let s = select_best(&result).unwrap();
        assert_eq!((s.index, s.lambda), (1, 0.5));
        assert!((s.lower_bound - 0.2).abs() < 1e-15);
        result.points.clear();
        assert!(select_best(&result).is_none());
    }

    #[test]
    fn config_checks() {
        let enet = RegularizerModel::elastic_net(1.0).unwrap();
        let l1 = RegularizerModel::l1();
        let cfg = ValidationConfig::new(0.1, Task::Classification, 10.0);
        assert!(cfg.validate(10, &enet).is_ok());
        assert!(cfg.validate(10, &l1).is_err());
        assert!(ValidationConfig { mu: Some(0.5), ..cfg }.validate(10, &l1).is_ok());
        assert!(ValidationConfig { eps_v: 1.0, ..cfg }.validate(10, &enet).is_err());
        assert!(ValidationConfig { eps_v: 0.0, ..cfg }.validate(10, &enet).is_err());
    }
}
