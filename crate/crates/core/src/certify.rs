//! Duality-gap certificates and their extrapolation to other values of λ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, l2_norm, Design};
use crate::model::{LossModel, RegularizerModel};

/// Relative slack under which a negative gap is treated as rounding noise.
pub const GAP_CLAMP_SLACK: f64 = 1e-9;

/// A certified primal/dual pair at one value of the regularization parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    /// `ζ = −λθ`
    pub zeta: Vec<f64>,
    pub gap: f64,
    /// `Δ = f(Xβ) − f(∇f*(ζ))`
    pub delta: f64,
    /// `f(Xβ)`
    pub f_val: f64,
    /// `‖ζ‖₂`
    pub zeta_norm: f64,
    /// `Ω(β) + Ω*(Xᵀθ)`, cached so the gap can be re-evaluated at any λ in O(n).
    pub reg_sum: f64,
}

impl Certificate {
    /// Builds the certificate of `beta` at `lambda` with the rescaled-gradient dual point.
    pub fn new(
        x: &Design,
        loss: &LossModel,
        reg: &RegularizerModel,
        lambda: f64,
        beta: Vec<f64>,
    ) -> Result<Self> {
        let z = x.matvec(&beta);
        Self::from_fit(x, loss, reg, lambda, beta, &z)
    }

    /// Same as [`Certificate::new`] with `Xβ` already available.
    pub fn from_fit(
        x: &Design,
        loss: &LossModel,
        reg: &RegularizerModel,
        lambda: f64,
        beta: Vec<f64>,
        z: &[f64],
    ) -> Result<Self> {
        let grad = loss.grad(z);
        let theta = dual_point_from_grad(&grad, lambda, reg, x);
        let zeta: Vec<f64> = theta.iter().map(|t| -lambda * t).collect();
        let f_val = loss.value(z);
        let fc = loss.conjugate_value(&zeta);
        let xt_theta = x.rmatvec(&theta);
        let reg_conj = reg.conjugate(&xt_theta);
        if !fc.is_finite() {
            return Err(Error::InfeasibleDual("-λθ outside dom f*"));
        }
        if !reg_conj.is_finite() {
            return Err(Error::InfeasibleDual("Xᵀθ outside dom Ω*"));
        }
        let reg_sum = reg.value(&beta) + reg_conj;
        let gap = clamp_gap(f_val + fc + lambda * reg_sum, loss.scale());
        let delta = f_val - loss.value(&loss.conjugate_grad(&zeta));
        let zeta_norm = l2_norm(&zeta);
        Ok(Self {
            lambda,
            beta,
            theta,
            zeta,
            gap,
            delta,
            f_val,
            zeta_norm,
            reg_sum,
        })
    }

    /// `Gap_λ(β, θ)` of this pair at another `lambda`; `+∞` when `−λθ ∉ dom f*`.
    pub fn gap_at(&self, lambda: f64, loss: &LossModel) -> f64 {
        let u: Vec<f64> = self.theta.iter().map(|t| -lambda * t).collect();
        let fc = loss.conjugate_value(&u);
        if !fc.is_finite() {
            return f64::INFINITY;
        }
        clamp_gap(self.f_val + fc + lambda * self.reg_sum, loss.scale())
    }
}

fn clamp_gap(gap: f64, scale: f64) -> f64 {
    if gap < 0.0 && gap >= -GAP_CLAMP_SLACK * scale {
        0.0
    } else {
        gap
    }
}

/// `θ = −∇f(Xβ) / max(λ, σ°(Xᵀ∇f(Xβ)))`
pub fn dual_point(
    beta: &[f64],
    lambda: f64,
    loss: &LossModel,
    reg: &RegularizerModel,
    x: &Design,
) -> Vec<f64> {
    let grad = loss.grad(&x.matvec(beta));
    dual_point_from_grad(&grad, lambda, reg, x)
}

fn dual_point_from_grad(grad: &[f64], lambda: f64, reg: &RegularizerModel, x: &Design) -> Vec<f64> {
    let denom = lambda.max(reg.polar(&x.rmatvec(grad)));
    if denom == 0.0 {
        return vec![0.0; grad.len()];
    }
    grad.iter().map(|g| -g / denom).collect()
}

/// `Gap_λ(β, θ) = f(Xβ) + f*(−λθ) + λ(Ω(β) + Ω*(Xᵀθ))`
pub fn duality_gap(
    beta: &[f64],
    theta: &[f64],
    lambda: f64,
    loss: &LossModel,
    reg: &RegularizerModel,
    x: &Design,
) -> Result<f64> {
    let u: Vec<f64> = theta.iter().map(|t| -lambda * t).collect();
    let fc = loss.conjugate_value(&u);
    if !fc.is_finite() {
        return Err(Error::InfeasibleDual("-λθ outside dom f*"));
    }
    let reg_conj = reg.conjugate(&x.rmatvec(theta));
    if !reg_conj.is_finite() {
        return Err(Error::InfeasibleDual("Xᵀθ outside dom Ω*"));
    }
    let gap = loss.value(&x.matvec(beta)) + fc + lambda * (reg.value(beta) + reg_conj);
    Ok(clamp_gap(gap, loss.scale()))
}

/// `Ω̃(β, θ) = Ω(β) + Ω*(Xᵀθ) − ⟨β, Xᵀθ⟩`, non-negative by Fenchel–Young.
pub fn regularizer_gap(beta: &[f64], theta: &[f64], x: &Design, reg: &RegularizerModel) -> Result<f64> {
    let v = x.rmatvec(theta);
    let conj = reg.conjugate(&v);
    if !conj.is_finite() {
        return Err(Error::InfeasibleDual("Xᵀθ outside dom Ω*"));
    }
    Ok(reg.value(beta) + conj - dot(beta, &v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

/// `Q_{t,φ}(ρ) = Gap_t + ρ(Δ_t − Gap_t) + φ(−ρζ_t)` with `φ = V_{f*,ζ_t}` or `U_{f*,ζ_t}`.
///
/// Bounds `Gap_λ(β_t, θ_t)` at `λ = λ_t(1 − ρ)`. Returns `+∞` when the shifted
/// dual point leaves `dom f*` or the upper modulus has no finite value.
pub fn q_bound(cert: &Certificate, rho: f64, side: Side, loss: &LossModel) -> f64 {
    if rho == 0.0 {
        return cert.gap;
    }
    let shifted: Vec<f64> = cert.zeta.iter().map(|z| (1.0 - rho) * z).collect();
    if !loss.in_dual_domain(&shifted) {
        return f64::INFINITY;
    }
    let w: Vec<f64> = cert.zeta.iter().map(|z| -rho * z).collect();
    let modulus = match side {
        Side::Upper => loss.dual_upper_modulus(&cert.zeta, &w),
        Side::Lower => loss.dual_lower_modulus(&cert.zeta, &w),
    }
    .unwrap_or(f64::INFINITY);
    cert.gap + rho * (cert.delta - cert.gap) + modulus
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn eye2() -> Design {
        DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap().into()
    }

    #[test]
    fn dual_point_examples() {
        let x = eye2();
        let loss = LossModel::squared(vec![1.0, 2.0]);
        let l1 = RegularizerModel::l1();
        let theta = dual_point(&[0.0, 0.0], 3.0, &loss, &l1, &x);
        assert!((theta[0] - 1.0 / 3.0).abs() < 1e-15 && (theta[1] - 2.0 / 3.0).abs() < 1e-15);

        let theta = dual_point(&[0.0, 0.0], 1.0, &loss, &l1, &x);
        assert_eq!(theta, vec![0.5, 1.0]);
        assert!(crate::linalg::linf_norm(&x.rmatvec(&theta)) <= 1.0);

        let logit = LossModel::logistic(vec![1.0, 0.0]).unwrap();
        assert_eq!(logit.grad(&[0.0, 0.0]), vec![-0.5, 0.5]);
        for lambda in [0.01, 0.3, 1.0, 50.0] {
            let theta = dual_point(&[0.0, 0.0], lambda, &logit, &l1, &x);
            let u: Vec<f64> = theta.iter().map(|t| -lambda * t).collect();
            assert!(logit.in_dual_domain(&u));
            assert!(l1.conjugate(&x.rmatvec(&theta)).is_finite());
        }
    }

    #[test]
    fn dual_point_is_zero_at_unregularized_optimum() {
        let x = eye2();
        let loss = LossModel::squared(vec![1.0, 2.0]);
        let theta = dual_point(&[1.0, 2.0], 0.0, &loss, &RegularizerModel::l1(), &x);
        assert_eq!(theta, vec![0.0, 0.0]);
    }

    #[test]
    fn gap_examples() {
        let x = eye2();
        let l1 = RegularizerModel::l1();
        let loss = LossModel::squared(vec![1.0, 2.0]);
        let g = duality_gap(&[0.0, 0.0], &[0.0, 0.0], 1.0, &loss, &l1, &x).unwrap();
        assert!((g - 2.5).abs() < 1e-15);
        let g = duality_gap(&[0.0, 0.0], &[1.0 / 3.0, 2.0 / 3.0], 3.0, &loss, &l1, &x).unwrap();
        assert!(g.abs() < 1e-14);

        let logit = LossModel::logistic(vec![1.0, 0.0]).unwrap();
        let g = duality_gap(&[0.0, 0.0], &[0.0, 0.0], 1.0, &logit, &l1, &x).unwrap();
        assert!((g - 1.386_294_4).abs() < 1e-7);

        assert!(matches!(
            duality_gap(&[0.0, 0.0], &[2.0, 0.0], 1.0, &loss, &l1, &x),
            Err(Error::InfeasibleDual(_))
        ));
    }

    #[test]
    fn regularizer_gap_examples() {
        let x = eye2();
        let l1 = RegularizerModel::l1();
        assert_eq!(regularizer_gap(&[0.0, 0.0], &[0.3, -0.9], &x, &l1).unwrap(), 0.0);
        // sign-consistent support with |Xᵀθ| = 1 there
        assert!(regularizer_gap(&[2.0, 0.0], &[1.0, 0.4], &x, &l1).unwrap().abs() < 1e-15);
        assert!(regularizer_gap(&[-2.0, 0.0], &[1.0, 0.4], &x, &l1).unwrap() > 0.0);
    }

    #[test]
    fn certificate_fields() {
        let x = eye2();
        let loss = LossModel::squared(vec![1.0, 2.0]);
        let c = Certificate::new(&x, &loss, &RegularizerModel::l1(), 3.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(c.gap, 0.0);
        for (z, t) in c.zeta.iter().zip(&c.theta) {
            assert_eq!(*z, -3.0 * t);
        }
        assert!((c.gap_at(3.0, &loss) - c.gap).abs() < 1e-15);
    }

    #[test]
    fn q_bound_at_zero_is_the_gap() {
        let x = eye2();
        let loss = LossModel::squared(vec![1.0, 2.0]);
        let c = Certificate::new(&x, &loss, &RegularizerModel::l1(), 1.0, vec![0.2, 0.5]).unwrap();
        assert_eq!(q_bound(&c, 0.0, Side::Upper, &loss), c.gap);
        assert_eq!(q_bound(&c, 0.0, Side::Lower, &loss), c.gap);
    }

    #[test]
    fn q_bound_quadratic_example() {
        // ν = 1, ‖ζ‖² = 4, Gap = 0.01, Δ = 0.02
        let c = Certificate {
            lambda: 1.0,
            beta: vec![],
            theta: vec![-2.0, 0.0],
            zeta: vec![2.0, 0.0],
            gap: 0.01,
            delta: 0.02,
            f_val: 0.0,
            zeta_norm: 2.0,
            reg_sum: 0.0,
        };
        let loss = LossModel::squared(vec![0.0, 0.0]);
        assert!((q_bound(&c, 0.5, Side::Upper, &loss) - 0.515).abs() < 1e-15);
    }

    #[test]
    fn squared_loss_bound_is_exact() {
        let x: Design = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, 0.1]])
            .unwrap()
            .into();
        let loss = LossModel::squared(vec![1.0, -2.0, 0.5]);
        let reg = RegularizerModel::l1();
        let c = Certificate::new(&x, &loss, &reg, 0.8, vec![0.1, -0.4]).unwrap();
        for lambda in [0.1, 0.5, 0.8, 1.3, 4.0] {
            let rho = 1.0 - lambda / 0.8;
            let direct = duality_gap(&c.beta, &c.theta, lambda, &loss, &reg, &x).unwrap();
            let q = q_bound(&c, rho, Side::Upper, &loss);
            assert!((q - direct).abs() <= 1e-8 * (1.0 + direct), "{q} vs {direct}");
            assert_eq!(q_bound(&c, rho, Side::Lower, &loss), q);
        }
    }

    #[test]
    fn logistic_right_shift_out_of_domain_is_infinite() {
        let x = eye2();
        let loss = LossModel::logistic(vec![1.0, 0.0]).unwrap();
        let c = Certificate::new(&x, &loss, &RegularizerModel::l1(), 1.0, vec![0.0, 0.0]).unwrap();
        // |ζ_i| = 0.5, so λ > 2λ_t exits the domain
        assert!(q_bound(&c, -1.5, Side::Upper, &loss).is_infinite());
        assert!(q_bound(&c, -1.5, Side::Lower, &loss).is_infinite());
    }
}
