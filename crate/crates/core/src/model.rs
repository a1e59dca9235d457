//! Loss and regularizer objects.
//!
//! A [`LossModel`] bundles a separable data-fitting term `f(z) = Σ f_i(z_i)`
//! with its Fenchel conjugate and the regularity moduli that bound the Bregman
//! divergence of `f` and `f*`. A [`RegularizerModel`] provides the penalty `Ω`,
//! its conjugate and the per-coordinate proximal map used by the solver.
//!
//! Moduli follow the usual convention: `U_{h,x}(w) ≤ h(x+w) − h(x) − ⟨∇h(x), w⟩ ≤ V_{h,x}(w)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, l2_norm, linf_norm};

/// Clamp used for logistic dual coordinates `ζ_i + y_i` inside `(0, 1)`.
pub const DUAL_DOMAIN_CLAMP: f64 = 1e-12;

/// Absolute slack accepted when testing membership of a dual domain.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Regularity modulus of a convex function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Modulus {
    /// `(lower/order)·‖w‖^order ≤ D(w) ≤ (upper/order)·‖w‖^order`.
    UniformPower { order: f64, lower: f64, upper: f64 },
    /// `(m, order)`-generalized self-concordance, applied coordinate-wise.
    SelfConcordant { m: f64, order: f64 },
}

/// `w_ν(τ)` from the generalized self-concordant Taylor bounds.
///
/// Returns `+∞` when `τ ≥ 1` for orders above 2, where the upper bound is void.
pub fn w_nu(order: f64, tau: f64) -> f64 {
    if order > 2.0 && tau >= 1.0 {
        return f64::INFINITY;
    }
    const SMALL: f64 = 1e-4;
    if tau.abs() < SMALL {
        // second-order expansions around 0; every order starts at 1/2
        return if order == 2.0 || order == 4.0 {
            0.5 + tau / 6.0
        } else if order == 3.0 {
            0.5 + tau / 3.0
        } else {
            let (lo, hi) = (w_nu(order, -SMALL), w_nu(order, SMALL));
            lo + (tau + SMALL) * (hi - lo) / (2.0 * SMALL)
        };
    }
    let t2 = tau * tau;
    if order == 2.0 {
        (tau.exp_m1() - tau) / t2
    } else if order == 3.0 {
        (-tau - (-tau).ln_1p()) / t2
    } else if order == 4.0 {
        ((1.0 - tau) * (-tau).ln_1p() + tau) / t2
    } else {
        let a = (order - 2.0) / (4.0 - order);
        let b = (order - 2.0) / (2.0 * (3.0 - order) * tau);
        let e = 2.0 * (3.0 - order) / (2.0 - order);
        a / tau * (b * ((1.0 - tau).powf(e) - 1.0) - 1.0)
    }
}

impl Modulus {
    /// Upper bound on the Bregman divergence of a separable function at
    /// `anchor` in direction `w`, given the per-coordinate Hessian `hess`.
    fn upper(&self, hess: &[f64], w: &[f64]) -> f64 {
        match *self {
            Modulus::UniformPower { order, upper, .. } => upper / order * l2_norm(w).powf(order),
            Modulus::SelfConcordant { m, order } => gsc_sum(m, order, hess, w, 1.0),
        }
    }

    fn lower(&self, hess: &[f64], w: &[f64]) -> f64 {
        match *self {
            Modulus::UniformPower { order, lower, .. } => lower / order * l2_norm(w).powf(order),
            Modulus::SelfConcordant { m, order } => gsc_sum(m, order, hess, w, -1.0),
        }
    }
}

/// `Σ_i w_ν(sign·d_i)·h_i·w_i²`, with `d_i` the scalar `d_ν` of coordinate `i`.
fn gsc_sum(m: f64, order: f64, hess: &[f64], w: &[f64], sign: f64) -> f64 {
    let mut total = 0.0;
    for (&h, &wi) in hess.iter().zip(w) {
        if wi == 0.0 {
            continue;
        }
        let local_sq = h * wi * wi;
        let d = if order == 2.0 {
            m * wi.abs()
        } else {
            (order / 2.0 - 1.0) * m * wi.abs().powf(3.0 - order) * local_sq.powf((order - 2.0) / 2.0)
        };
        let w = w_nu(order, sign * d);
        if !w.is_finite() {
            return f64::INFINITY;
        }
        total += w * local_sq;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// `f_i(z) = (y_i − z)²/2`
    Squared,
    /// `f_i(z) = log(1 + e^z) − y_i z`, labels in `{0, 1}`
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossModel {
    kind: LossKind,
    y: Vec<f64>,
    dual_modulus: Modulus,
    primal_modulus: Modulus,
}

impl LossModel {
    pub fn squared(y: Vec<f64>) -> Self {
        let quad = Modulus::UniformPower {
            order: 2.0,
            lower: 1.0,
            upper: 1.0,
        };
        Self {
            kind: LossKind::Squared,
            y,
            dual_modulus: quad,
            primal_modulus: quad,
        }
    }

    /// Logistic loss; labels must be 0 or 1.
    pub fn logistic(y: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::LabelDomain(bad));
        }
        Ok(Self {
            kind: LossKind::Logistic,
            y,
            dual_modulus: Modulus::SelfConcordant { m: 1.0, order: 4.0 },
            // 1/4-smooth, not uniformly convex
            primal_modulus: Modulus::UniformPower {
                order: 2.0,
                lower: 0.0,
                upper: 0.25,
            },
        })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn dual_modulus(&self) -> Modulus {
        self.dual_modulus
    }

    pub fn primal_modulus(&self) -> Modulus {
        self.primal_modulus
    }

    /// Curvature bound of each `f_i`, used for coordinate-wise Lipschitz constants.
    pub fn curvature_bound(&self) -> f64 {
        match self.kind {
            LossKind::Squared => 1.0,
            LossKind::Logistic => 0.25,
        }
    }

    /// Characteristic magnitude `1 + f(0)` used to scale absolute slacks.
    pub fn scale(&self) -> f64 {
        1.0 + self.value(&vec![0.0; self.y.len()])
    }

    /// `f(z) = Σ f_i(z_i)`
    pub fn value(&self, z: &[f64]) -> f64 {
        match self.kind {
            LossKind::Squared => z
                .iter()
                .zip(&self.y)
                .map(|(zi, yi)| 0.5 * (yi - zi) * (yi - zi))
                .sum(),
            LossKind::Logistic => z
                .iter()
                .zip(&self.y)
                .map(|(&zi, &yi)| softplus(zi) - yi * zi)
                .sum(),
        }
    }

    #[inline]
    pub fn grad_i(&self, i: usize, zi: f64) -> f64 {
        match self.kind {
            LossKind::Squared => zi - self.y[i],
            LossKind::Logistic => sigmoid(zi) - self.y[i],
        }
    }

    /// `∇f(z)`
    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        z.iter().enumerate().map(|(i, &zi)| self.grad_i(i, zi)).collect()
    }

    /// `f*(u)`, or `+∞` when `u ∉ dom f*`.
    ///
    /// The squared-loss conjugate `((u+y)² − y²)/2` is evaluated as `u·(y + u/2)`.
    pub fn conjugate_value(&self, u: &[f64]) -> f64 {
        match self.kind {
            LossKind::Squared => u
                .iter()
                .zip(&self.y)
                .map(|(ui, yi)| ui * (yi + 0.5 * ui))
                .sum(),
            LossKind::Logistic => {
                let mut total = 0.0;
                for (ui, yi) in u.iter().zip(&self.y) {
                    let s = ui + yi;
                    if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&s) {
                        return f64::INFINITY;
                    }
                    total += neg_entropy(s.clamp(0.0, 1.0));
                }
                total
            }
        }
    }

    pub fn in_dual_domain(&self, u: &[f64]) -> bool {
        self.conjugate_value(u).is_finite()
    }

    /// `∇f*(u)`; logistic coordinates are clamped to the interior of the domain.
    pub fn conjugate_grad(&self, u: &[f64]) -> Vec<f64> {
        match self.kind {
            LossKind::Squared => u.iter().zip(&self.y).map(|(ui, yi)| ui + yi).collect(),
            LossKind::Logistic => u
                .iter()
                .zip(&self.y)
                .map(|(ui, yi)| {
                    let s = (ui + yi).clamp(DUAL_DOMAIN_CLAMP, 1.0 - DUAL_DOMAIN_CLAMP);
                    (s / (1.0 - s)).ln()
                })
                .collect(),
        }
    }

    /// Diagonal of `∇²f*(u)`.
    pub fn conjugate_hessian_diag(&self, u: &[f64]) -> Vec<f64> {
        match self.kind {
            LossKind::Squared => vec![1.0; u.len()],
            LossKind::Logistic => u
                .iter()
                .zip(&self.y)
                .map(|(ui, yi)| {
                    let s = (ui + yi).clamp(DUAL_DOMAIN_CLAMP, 1.0 - DUAL_DOMAIN_CLAMP);
                    1.0 / (s * (1.0 - s))
                })
                .collect(),
        }
    }

    /// `V_{f*,ζ}(w)`; `+∞` when no finite bound exists.
    pub fn dual_upper_modulus(&self, anchor: &[f64], w: &[f64]) -> Result<f64> {
        self.check_anchor(anchor, w)?;
        let hess = self.conjugate_hessian_diag(anchor);
        Ok(self.dual_modulus.upper(&hess, w))
    }

    /// `U_{f*,ζ}(w)`; always finite.
    pub fn dual_lower_modulus(&self, anchor: &[f64], w: &[f64]) -> Result<f64> {
        self.check_anchor(anchor, w)?;
        let hess = self.conjugate_hessian_diag(anchor);
        Ok(self.dual_modulus.lower(&hess, w))
    }

    fn check_anchor(&self, anchor: &[f64], w: &[f64]) -> Result<()> {
        if anchor.len() != w.len() || anchor.len() != self.y.len() {
            return Err(Error::DimensionMismatch(format!(
                "anchor {} / displacement {} / samples {}",
                anchor.len(),
                w.len(),
                self.y.len()
            )));
        }
        if !self.in_dual_domain(anchor) {
            return Err(Error::InfeasibleDual("modulus anchor"));
        }
        Ok(())
    }

    /// `V_{f*}` as a function of a norm, for power moduli only.
    pub fn dual_upper_radial(&self, t: f64) -> Result<f64> {
        match self.dual_modulus {
            Modulus::UniformPower { order, upper, .. } => Ok(upper / order * t.abs().powf(order)),
            Modulus::SelfConcordant { .. } => Err(Error::ModulusUnavailable("radial dual smoothness")),
        }
    }

    /// Inverse maps of the primal moduli, available for uniformly convex and smooth losses.
    pub fn primal_modulus_inverses(&self) -> Result<PrimalInverses> {
        match self.primal_modulus {
            Modulus::UniformPower {
                order,
                lower,
                upper,
            } if lower > 0.0 && upper > 0.0 => Ok(PrimalInverses {
                order,
                lower,
                upper,
            }),
            Modulus::UniformPower { .. } => Err(Error::ModulusUnavailable("primal uniform convexity")),
            Modulus::SelfConcordant { .. } => Err(Error::ModulusUnavailable("primal power modulus")),
        }
    }
}

/// `(V_f*)^{-1}` and `U_f^{-1}` for a power-type primal modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalInverses {
    order: f64,
    lower: f64,
    upper: f64,
}

impl PrimalInverses {
    /// `V_f*(s) = (1 − 1/d)·ν^{−1/(d−1)}·s^{d/(d−1)}` for `V_f(t) = (ν/d)t^d`.
    pub fn smoothness_conjugate(&self, s: f64) -> f64 {
        let d = self.order;
        (1.0 - 1.0 / d) * self.upper.powf(-1.0 / (d - 1.0)) * s.abs().powf(d / (d - 1.0))
    }

    /// `(V_f*)^{-1}(a)`
    pub fn smoothness_conjugate_inv(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let d = self.order;
        (a * self.upper.powf(1.0 / (d - 1.0)) / (1.0 - 1.0 / d)).powf((d - 1.0) / d)
    }

    /// `U_f(t) = (μ/d)t^d`
    pub fn convexity(&self, t: f64) -> f64 {
        self.lower / self.order * t.abs().powf(self.order)
    }

    /// `U_f^{-1}(a)`
    pub fn convexity_inv(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        (self.order * a / self.lower).powf(1.0 / self.order)
    }

    /// Strong convexity / smoothness constants when the order is 2.
    pub fn quadratic_constants(&self) -> Option<(f64, f64)> {
        (self.order == 2.0).then_some((self.lower, self.upper))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegularizerKind {
    /// `‖β‖₁`
    L1,
    /// `‖β‖₁ + (γ/2)‖β‖²₂`
    ElasticNet { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizerModel {
    pub kind: RegularizerKind,
}

impl RegularizerModel {
    pub fn l1() -> Self {
        Self {
            kind: RegularizerKind::L1,
        }
    }

    pub fn elastic_net(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("elastic-net γ must be positive, got {gamma}")));
        }
        Ok(Self {
            kind: RegularizerKind::ElasticNet { gamma },
        })
    }

    /// `Ω(β)`
    pub fn value(&self, beta: &[f64]) -> f64 {
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        match self.kind {
            RegularizerKind::L1 => l1,
            RegularizerKind::ElasticNet { gamma } => l1 + 0.5 * gamma * dot(beta, beta),
        }
    }

    /// `Ω*(v)`, `+∞` outside the domain.
    pub fn conjugate(&self, v: &[f64]) -> f64 {
        match self.kind {
            RegularizerKind::L1 => {
                if linf_norm(v) <= 1.0 + DOMAIN_SLACK {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            RegularizerKind::ElasticNet { gamma } => v
                .iter()
                .map(|x| {
                    let excess = (x.abs() - 1.0).max(0.0);
                    excess * excess / (2.0 * gamma)
                })
                .sum(),
        }
    }

    /// `σ°_{dom Ω*}(v)`: the dual norm for L1, zero when `dom Ω*` is the whole space.
    pub fn polar(&self, v: &[f64]) -> f64 {
        match self.kind {
            RegularizerKind::L1 => linf_norm(v),
            RegularizerKind::ElasticNet { .. } => 0.0,
        }
    }

    /// Coordinate proximal map `argmin_b (b − u)²/2 + step·Ω_j(b)`.
    #[inline]
    pub fn prox(&self, u: f64, step: f64) -> f64 {
        let soft = u.signum() * (u.abs() - step).max(0.0);
        match self.kind {
            RegularizerKind::L1 => soft,
            RegularizerKind::ElasticNet { gamma } => soft / (1.0 + step * gamma),
        }
    }

    /// Strong convexity of `λΩ`.
    pub fn strong_convexity(&self, lambda: f64) -> f64 {
        match self.kind {
            RegularizerKind::L1 => 0.0,
            RegularizerKind::ElasticNet { gamma } => lambda * gamma,
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `Nh(s) = s log s + (1 − s) log(1 − s)`, with `0 log 0 = 0`.
#[inline]
fn neg_entropy(s: f64) -> f64 {
    let a = if s > 0.0 { s * s.ln() } else { 0.0 };
    let b = if s < 1.0 { (1.0 - s) * (-s).ln_1p() } else { 0.0 };
    a + b
}
