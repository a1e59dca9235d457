//! Cyclic proximal coordinate descent with duality-gap stopping.

use serde::{Deserialize, Serialize};

use crate::certify::Certificate;
use crate::error::{Error, Result};
use crate::linalg::{linf_norm, Design};
use crate::model::{LossModel, RegularizerModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target duality gap (absolute).
    pub eps_c: f64,
    /// Also require `Δ ≤ eps_c` before stopping.
    pub enforce_delta: bool,
    pub max_epochs: usize,
    /// Epochs between two gap evaluations.
    pub gap_check_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_c: 1e-6,
            enforce_delta: false,
            max_epochs: 100_000,
            gap_check_every: 10,
        }
    }
}

impl SolverConfig {
    pub fn with_eps(eps_c: f64) -> Self {
        Self {
            eps_c,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_c > 0.0) {
            return Err(Error::InvalidConfig(format!("eps_c must be positive, got {}", self.eps_c)));
        }
        if self.max_epochs == 0 || self.gap_check_every == 0 {
            return Err(Error::InvalidConfig("max_epochs and gap_check_every must be ≥ 1".into()));
        }
        Ok(())
    }

    fn accepts(&self, cert: &Certificate) -> bool {
        cert.gap <= self.eps_c && (!self.enforce_delta || cert.delta <= self.eps_c)
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub certificate: Certificate,
    pub epochs: usize,
    /// Primal objective after each epoch.
    pub objective_trace: Vec<f64>,
}

/// Coordinate descent bound to one dataset; column Lipschitz constants are computed once.
#[derive(Debug, Clone)]
pub struct CoordinateDescent<'a> {
    x: &'a Design,
    loss: &'a LossModel,
    reg: &'a RegularizerModel,
    lipschitz: Vec<f64>,
}

impl<'a> CoordinateDescent<'a> {
    pub fn new(x: &'a Design, loss: &'a LossModel, reg: &'a RegularizerModel) -> Result<Self> {
        if x.n_rows() != loss.n_samples() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows but {} labels",
                x.n_rows(),
                loss.n_samples()
            )));
        }
        let curvature = loss.curvature_bound();
        let lipschitz = x.col_sq_norms().into_iter().map(|s| s * curvature).collect();
        Ok(Self {
            x,
            loss,
            reg,
            lipschitz,
        })
    }

    pub fn design(&self) -> &'a Design {
        self.x
    }

    pub fn loss(&self) -> &'a LossModel {
        self.loss
    }

    pub fn regularizer(&self) -> &'a RegularizerModel {
        self.reg
    }

    fn objective(&self, lambda: f64, beta: &[f64], z: &[f64]) -> f64 {
        self.loss.value(z) + lambda * self.reg.value(beta)
    }

    /// Solves the regularized problem at `lambda` to the configured accuracy.
    pub fn fit(&self, lambda: f64, warm_start: Option<&[f64]>, cfg: &SolverConfig) -> Result<FitOutcome> {
        cfg.validate()?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("λ must be positive, got {lambda}")));
        }
        let p = self.x.n_cols();
        let mut beta = match warm_start {
            Some(b) if b.len() != p => {
                return Err(Error::DimensionMismatch(format!("warm start has {} entries, expected {p}", b.len())))
            }
            Some(b) => b.to_vec(),
            None => vec![0.0; p],
        };
        let mut z = self.x.matvec(&beta);
        let mut trace = Vec::new();

        let mut best = Certificate::from_fit(self.x, self.loss, self.reg, lambda, beta.clone(), &z)?;
        if cfg.accepts(&best) {
            return Ok(FitOutcome {
                certificate: best,
                epochs: 0,
                objective_trace: trace,
            });
        }

        for epoch in 1..=cfg.max_epochs {
            let mut changed = false;
            for j in 0..p {
                let lj = self.lipschitz[j];
                if lj == 0.0 {
                    continue;
                }
                let gj = self.x.col_dot_with(j, |i| self.loss.grad_i(i, z[i]));
                let old = beta[j];
                let new = self.reg.prox(old - gj / lj, lambda / lj);
                if new != old {
                    self.x.col_axpy(j, new - old, &mut z);
                    beta[j] = new;
                    changed = true;
                }
            }
            trace.push(self.objective(lambda, &beta, &z));

            if changed && epoch % cfg.gap_check_every != 0 && epoch != cfg.max_epochs {
                continue;
            }
            // recompute Xβ so the certificate does not inherit update drift
            z = self.x.matvec(&beta);
            let cert = Certificate::from_fit(self.x, self.loss, self.reg, lambda, beta.clone(), &z)?;
            if cfg.accepts(&cert) {
                return Ok(FitOutcome {
                    certificate: cert,
                    epochs: epoch,
                    objective_trace: trace,
                });
            }
            if cert.gap < best.gap {
                best = cert;
            }
            if !changed {
                // fixed point reached: the target is below attainable precision
                return Err(Error::MaxEpochsExceeded {
                    epochs: epoch,
                    target: cfg.eps_c,
                    best: Box::new(best),
                });
            }
        }
        Err(Error::MaxEpochsExceeded {
            epochs: cfg.max_epochs,
            target: cfg.eps_c,
            best: Box::new(best),
        })
    }
}

/// One-shot solve without reusing column norms.
pub fn fit(
    x: &Design,
    loss: &LossModel,
    reg: &RegularizerModel,
    lambda: f64,
    warm_start: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<FitOutcome> {
    CoordinateDescent::new(x, loss, reg)?.fit(lambda, warm_start, cfg)
}

/// Smallest λ for which `β = 0` is optimal: `‖Xᵀ∇f(0)‖_∞`.
pub fn lambda_max(x: &Design, loss: &LossModel) -> f64 {
    let grad0 = loss.grad(&vec![0.0; x.n_rows()]);
    linf_norm(&x.rmatvec(&grad0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column(values: &[f64]) -> Design {
        DenseMatrix::from_col_major(values.len(), 1, values.to_vec()).unwrap().into()
    }

    #[test]
    fn lambda_max_examples() {
        let eye: Design = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap().into();
        assert_eq!(lambda_max(&eye, &LossModel::squared(vec![1.0, 2.0])), 2.0);
        assert_eq!(lambda_max(&eye, &LossModel::squared(vec![0.0, 0.0])), 0.0);
        assert_eq!(lambda_max(&eye, &LossModel::logistic(vec![1.0, 0.0]).unwrap()), 0.5);
    }

    #[test]
    fn one_feature_lasso_matches_soft_thresholding() {
        let x = column(&[1.0, 1.0]);
        let loss = LossModel::squared(vec![1.0, 1.0]);
        let reg = RegularizerModel::l1();
        let cfg = SolverConfig::with_eps(1e-14);
        let out = fit(&x, &loss, &reg, 1.0, None, &cfg).unwrap();
        assert!((out.certificate.beta[0] - 0.5).abs() < 1e-8);
        let out = fit(&x, &loss, &reg, 2.5, None, &cfg).unwrap();
        assert_eq!(out.certificate.beta[0], 0.0);
        assert_eq!(out.epochs, 0);
    }

    #[test]
    fn logistic_at_lambda_max_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (n, p) = (20, 5);
        let data: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Design = DenseMatrix::from_col_major(n, p, data).unwrap().into();
        let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let loss = LossModel::logistic(y).unwrap();
        let reg = RegularizerModel::l1();
        let lmax = lambda_max(&x, &loss);
        let cfg = SolverConfig::with_eps(1e-10);
        let out = fit(&x, &loss, &reg, lmax * 1.0001, None, &cfg).unwrap();
        assert!(out.certificate.beta.iter().all(|&b| b == 0.0));
        assert!(out.certificate.gap <= 1e-10);
    }

    #[test]
    fn objective_is_monotone_and_gap_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (n, p) = (30, 12);
        let data: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Design = DenseMatrix::from_col_major(n, p, data).unwrap().into();
        let y_reg: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y_cls: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect();
        for (loss, reg) in [
            (LossModel::squared(y_reg), RegularizerModel::l1()),
            (LossModel::logistic(y_cls).unwrap(), RegularizerModel::elastic_net(0.5).unwrap()),
        ] {
            let lmax = lambda_max(&x, &loss);
            let cfg = SolverConfig {
                eps_c: 1e-9,
                enforce_delta: true,
                gap_check_every: 1,
                ..SolverConfig::default()
            };
            let out = fit(&x, &loss, &reg, 0.1 * lmax, None, &cfg).unwrap();
            let scale = loss.scale();
            for w in out.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * scale);
            }
            let c = &out.certificate;
            let recomputed = crate::certify::duality_gap(&c.beta, &c.theta, c.lambda, &loss, &reg, &x).unwrap();
            assert!(recomputed <= 1e-9 + 1e-12 * scale);
            assert!(c.delta <= 1e-9);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = column(&[1.0, 1.0]);
        let loss = LossModel::squared(vec![1.0, 1.0]);
        let reg = RegularizerModel::l1();
        assert!(fit(&x, &loss, &reg, 0.0, None, &SolverConfig::default()).is_err());
        assert!(fit(&x, &loss, &reg, 1.0, Some(&[1.0, 2.0]), &SolverConfig::default()).is_err());
        assert!(fit(&x, &loss, &reg, 1.0, None, &SolverConfig::with_eps(0.0)).is_err());
        let short = LossModel::squared(vec![1.0]);
        assert!(matches!(CoordinateDescent::new(&x, &short, &reg), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn max_epochs_carries_best_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (n, p) = (15, 30);
        let data: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Design = DenseMatrix::from_col_major(n, p, data).unwrap().into();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let loss = LossModel::squared(y);
        let cfg = SolverConfig {
            eps_c: 1e-14,
            max_epochs: 2,
            gap_check_every: 1,
            ..SolverConfig::default()
        };
        let lmax = lambda_max(&x, &loss);
        match fit(&x, &loss, &RegularizerModel::l1(), 0.01 * lmax, None, &cfg) {
            Err(Error::MaxEpochsExceeded { epochs, best, .. }) => {
                assert_eq!(epochs, 2);
                assert!(best.gap.is_finite() && best.gap > 0.0);
            }
            other => panic!("expected MaxEpochsExceeded, got {other:?}"),
        }
    }
}
