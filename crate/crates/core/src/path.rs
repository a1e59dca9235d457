//! Approximation paths over a range of regularization parameters.
//!
//! Every strategy produces a list of certificates ordered by decreasing `λ`
//! together with a certified upper bound on the path error.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{q_bound, Certificate, Side};
use crate::error::{Error, Result};
use crate::linalg::Design;
use crate::model::{LossModel, Modulus, RegularizerModel};
use crate::solve::{lambda_max, CoordinateDescent, SolverConfig};

/// Largest right step considered; `λ_t(1 + RIGHT_STEP_CAP)` is far beyond any useful range.
pub const RIGHT_STEP_CAP: f64 = 1e6;
const BRACKET_START: f64 = 1e-3;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Unilateral,
    Bilateral,
    UniformUnilateral,
    UniformBilateral,
    Default { size: usize, decades: f64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Unilateral => "unilateral",
            Strategy::Bilateral => "bilateral",
            Strategy::UniformUnilateral => "uniform_unilateral",
            Strategy::UniformBilateral => "uniform_bilateral",
            Strategy::Default { .. } => "default",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniformMode {
    Unilateral,
    Bilateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub eps: f64,
    pub eps_c: f64,
    /// `None` uses `‖Xᵀ∇f(0)‖_∞`.
    pub lambda_max: Option<f64>,
    /// `λmin = λmax / lambda_min_ratio`; ignored by the default grid.
    pub lambda_min_ratio: f64,
    pub strategy: Strategy,
    /// Relative bisection tolerance for step sizes.
    pub root_tol: f64,
    /// Require `Δ_t ≤ ε_c` from the inner solver as well.
    pub enforce_delta: bool,
    /// Abort once this many points have been solved.
    pub max_points: usize,
}

impl PathConfig {
    pub fn new(eps: f64, eps_c: f64, lambda_min_ratio: f64, strategy: Strategy) -> Self {
        Self {
            eps,
            eps_c,
            lambda_max: None,
            lambda_min_ratio,
            strategy,
            root_tol: 1e-10,
            enforce_delta: true,
            max_points: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_c > 0.0 && self.eps_c < self.eps && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < eps_c < eps, got eps_c = {}, eps = {}",
                self.eps_c, self.eps
            )));
        }
        if !(self.lambda_min_ratio >= 1.0 && self.lambda_min_ratio.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda_min_ratio must be ≥ 1, got {}",
                self.lambda_min_ratio
            )));
        }
        if let Some(l) = self.lambda_max {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidConfig(format!("lambda_max must be positive, got {l}")));
            }
        }
        if !(self.root_tol > 0.0 && self.root_tol < 1.0) {
            return Err(Error::InvalidConfig(format!("root_tol must be in (0, 1), got {}", self.root_tol)));
        }
        if self.max_points == 0 {
            return Err(Error::InvalidConfig("max_points must be ≥ 1".into()));
        }
        if let Strategy::Default { size, decades } = self.strategy {
            if size < 2 || !(decades >= 0.0 && decades.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "default grid needs size ≥ 2 and decades ≥ 0, got {size} and {decades}"
                )));
            }
        }
        Ok(())
    }
}

/// Step sizes computed at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub rho_left: f64,
    pub rho_right: f64,
    /// Right step from the bilateral bound `Q̃`.
    pub rho_tilde_right: Option<f64>,
    pub rho_bilateral: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformInfo {
    pub rho0: f64,
    /// `⌊log(λmin/λmax) / log(1 − ρ₀)⌋`
    pub t_formula: usize,
    /// `λmin` had to be added because the last geometric point did not reach it.
    pub appended_endpoint: bool,
}

#[derive(Debug, Clone)]
pub struct PathResult {
    pub strategy: Strategy,
    pub eps: f64,
    pub eps_c: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Ordered by decreasing `λ`.
    pub certificates: Vec<Certificate>,
    pub steps: Vec<StepInfo>,
    pub certified_eps: f64,
    pub uniform: Option<UniformInfo>,
    pub complexity_bound: Option<f64>,
    pub total_epochs: usize,
    pub wall_time_secs: f64,
}

impl PathResult {
    /// Grid cardinality.
    pub fn size(&self) -> usize {
        self.certificates.len()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.certificates.iter().map(|c| c.lambda).collect()
    }
}

/// Largest `ρ ∈ [0, cap]` with `q(ρ) ≤ threshold(ρ)`.
///
/// `q − threshold` must be convex with a non-positive value at 0, so the feasible
/// set is an interval containing 0 and bisection finds its right end.
pub fn largest_step<Q, E>(q: Q, threshold: E, cap: f64, rel_tol: f64) -> f64
where
    Q: Fn(f64) -> f64,
    E: Fn(f64) -> f64,
{
    let feasible = |rho: f64| {
        let v = q(rho);
        v.is_finite() && v <= threshold(rho)
    };
    let mut lo = 0.0;
    let mut hi = BRACKET_START.min(cap);
    loop {
        if !feasible(hi) {
            break;
        }
        lo = hi;
        if hi >= cap {
            return cap;
        }
        hi = (2.0 * hi).min(cap);
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= rel_tol * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Towards smaller `λ` (`ρ > 0`).
    Left,
    /// Towards larger `λ`.
    Right,
}

/// Closed-form `(ρ^ℓ, ρ^r)` for a quadratic dual modulus `(ν/2)‖·‖²`.
///
/// Both are `+∞` when `ζ = 0`.
pub fn step_quadratic(cert: &Certificate, eps: f64, nu: f64) -> (f64, f64) {
    let z2 = cert.zeta_norm * cert.zeta_norm;
    if z2 == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let delta = (eps - cert.gap).max(0.0);
    let delta_tilde = cert.delta - cert.gap;
    let root = (2.0 * nu * delta * z2 + delta_tilde * delta_tilde).sqrt();
    let denom = nu * z2;
    // the left root written without cancellation when δ̃ > 0
    let left = if delta_tilde > 0.0 {
        2.0 * delta / (root + delta_tilde)
    } else {
        (root - delta_tilde) / denom
    };
    let right = if delta_tilde < 0.0 {
        2.0 * delta / (root - delta_tilde)
    } else {
        (root + delta_tilde) / denom
    };
    (left, right)
}

/// Largest `ρ ≥ 0` with `Q_upper(±ρ) ≤ eps`, capped at 1 on the left.
pub fn step_root(cert: &Certificate, eps: f64, direction: Direction, loss: &LossModel, root_tol: f64) -> f64 {
    // Q starts at ε with slope ±(Δ − Gap) and the modulus term is o(ρ)
    let slope = cert.delta - cert.gap;
    let blocked = match direction {
        Direction::Left => slope >= 0.0,
        Direction::Right => slope <= 0.0,
    };
    if cert.gap >= eps && blocked {
        return 0.0;
    }
    match direction {
        Direction::Left => largest_step(|r| q_bound(cert, r, Side::Upper, loss), |_| eps, 1.0, root_tol),
        Direction::Right => largest_step(
            |r| q_bound(cert, -r, Side::Upper, loss),
            |_| eps,
            RIGHT_STEP_CAP,
            root_tol,
        ),
    }
}

/// `(ρ^ℓ, ρ^r)` from the closed form when available, by root finding otherwise.
pub fn steps(cert: &Certificate, eps: f64, loss: &LossModel, root_tol: f64) -> (f64, f64) {
    match loss.dual_modulus() {
        Modulus::UniformPower { order, upper, .. } if order == 2.0 => {
            let (l, r) = step_quadratic(cert, eps, upper);
            (l.min(1.0), r.min(RIGHT_STEP_CAP))
        }
        _ => (
            step_root(cert, eps, Direction::Left, loss, root_tol),
            step_root(cert, eps, Direction::Right, loss, root_tol),
        ),
    }
}

/// Constants bounding the gap at every later point of the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralConstants {
    pub r_tilde: f64,
    pub delta_tilde: f64,
    pub eps_c: f64,
    dual_order: f64,
    dual_upper: f64,
}

impl BilateralConstants {
    fn dual_smoothness(&self, t: f64) -> f64 {
        self.dual_upper / self.dual_order * t.abs().powf(self.dual_order)
    }

    /// `Q̃(ρ) = ε_c + ρ(Δ̃ − ε_c) + V_f*(|ρ|R̃)`
    pub fn q_tilde(&self, rho: f64) -> f64 {
        self.eps_c + rho * (self.delta_tilde - self.eps_c) + self.dual_smoothness(rho.abs() * self.r_tilde)
    }

    /// Bound on `Q_{t'}(−ρ)` for `ρ ≥ 0`: `ε_c(1 + ρ) + V_f*(ρR̃)`.
    pub fn q_tilde_right(&self, rho: f64) -> f64 {
        self.eps_c * (1.0 + rho) + self.dual_smoothness(rho * self.r_tilde)
    }

    /// Largest `ρ ∈ [0, 1]` with `Q̃(ρ) ≤ eps`.
    pub fn left_step(&self, eps: f64, root_tol: f64) -> f64 {
        largest_step(|r| self.q_tilde(r), |_| eps, 1.0, root_tol)
    }

    /// Largest `ρ ≥ 0` with `Q̃` bounding the gap by `eps` on the right.
    pub fn right_step(&self, eps: f64, root_tol: f64) -> f64 {
        largest_step(|r| self.q_tilde_right(r), |_| eps, RIGHT_STEP_CAP, root_tol)
    }
}

/// `R̃`, `Δ̃` and `Q̃` from a certificate and its left step.
///
/// `R̃` uses `min(f(Xβ_t) + 2ε_c/ρ^ℓ, f(0) + ε_c)`; the second term bounds the
/// loss of any `ε_c`-solution and stays valid when `ρ^ℓ` is tiny.
pub fn bilateral_constants(cert: &Certificate, rho_left: f64, eps_c: f64, loss: &LossModel) -> Result<BilateralConstants> {
    let inverses = loss.primal_modulus_inverses()?;
    let (dual_order, dual_upper) = match loss.dual_modulus() {
        Modulus::UniformPower { order, upper, .. } => (order, upper),
        Modulus::SelfConcordant { .. } => return Err(Error::ModulusUnavailable("dual uniform smoothness")),
    };
    if !(rho_left > 0.0) {
        return Err(Error::InvalidConfig(format!("bilateral constants need ρ^ℓ > 0, got {rho_left}")));
    }
    let f0 = loss.value(&vec![0.0; loss.n_samples()]);
    let level = (cert.f_val + 2.0 * eps_c / rho_left).min(f0 + eps_c);
    let r_tilde = inverses.smoothness_conjugate_inv(level);
    let delta_tilde = r_tilde * inverses.convexity_inv(eps_c);
    Ok(BilateralConstants {
        r_tilde,
        delta_tilde,
        eps_c,
        dual_order,
        dual_upper,
    })
}

/// `ρ^(b) = (ρ^ℓ + ρ̃^r) / (1 + ρ̃^r)`
pub fn bilateral_combine(rho_left: f64, rho_tilde_right: f64) -> f64 {
    (rho_left + rho_tilde_right) / (1.0 + rho_tilde_right)
}

/// Returns `(ρ^(b), ρ^ℓ, ρ̃^r)`.
pub fn step_bilateral(
    cert: &Certificate,
    eps: f64,
    eps_c: f64,
    loss: &LossModel,
    root_tol: f64,
) -> Result<(f64, f64, f64)> {
    let (rho_left, _) = steps(cert, eps, loss, root_tol);
    let constants = bilateral_constants(cert, rho_left, eps_c, loss)?;
    let rho_tilde_right = constants.right_step(eps, root_tol);
    Ok((bilateral_combine(rho_left, rho_tilde_right), rho_left, rho_tilde_right))
}

/// `λ_t = λmax·10^{−δt/(T−1)}` for `t = 0, …, T−1`.
pub fn default_grid(lambda_max: f64, size: usize, decades: f64) -> Result<Vec<f64>> {
    if size < 2 {
        return Err(Error::InvalidConfig(format!("default grid needs at least 2 points, got {size}")));
    }
    let last = (size - 1) as f64;
    Ok((0..size)
        .map(|t| lambda_max * 10f64.powf(-decades * t as f64 / last))
        .collect())
}

/// `⌊log(λmin/λmax) / log(1 − ρ₀)⌋`, with `ratio = λmax/λmin`.
pub fn uniform_cardinality(rho0: f64, ratio: f64) -> usize {
    if ratio <= 1.0 || rho0 >= 1.0 {
        return 0;
    }
    if rho0 <= 0.0 {
        return usize::MAX;
    }
    let t = (1.0 / ratio).ln() / (-rho0).ln_1p();
    t.floor() as usize
}

/// `log(λmax/λmin)·sqrt((ν/μ)·f(Xβ₀)/(ε − ε_c))` for losses with quadratic primal moduli.
pub fn complexity_estimate(
    loss: &LossModel,
    cert0: &Certificate,
    eps: f64,
    eps_c: f64,
    lambda_min: f64,
    lambda_max: f64,
) -> Option<f64> {
    let (mu, nu) = loss.primal_modulus_inverses().ok()?.quadratic_constants()?;
    Some(complexity_formula((lambda_max / lambda_min).ln(), nu, mu, cert0.f_val, eps - eps_c))
}

pub fn complexity_formula(log_ratio: f64, nu: f64, mu: f64, f0: f64, margin: f64) -> f64 {
    log_ratio * (nu / mu * f0 / margin).sqrt()
}

/// Certified bound on `max_{λ ∈ [λmin, λmax]} min_t Gap_λ(β_t, θ_t)`.
///
/// On each interval between consecutive grid points the two gap bounds are
/// replaced by their monotone envelopes, whose crossing is located by bisection.
/// Each gap is also convex in `λ`, so its chord is a second bound; the smaller one is kept.
pub fn grid_error(certs: &[Certificate], lambda_min: f64, lambda_max: f64, loss: &LossModel) -> f64 {
    let Some(first) = certs.first() else {
        return f64::INFINITY;
    };
    let last = certs.last().expect("non-empty");
    // envelope of the left bound of `c` at λ ≤ c.λ, and of the right bound at λ ≥ c.λ
    let env = |c: &Certificate, lambda: f64| -> f64 {
        let q = q_bound(c, 1.0 - lambda / c.lambda, Side::Upper, loss);
        if q.is_nan() {
            f64::INFINITY
        } else {
            q.max(c.gap)
        }
    };
    let gap = |c: &Certificate, lambda: f64| -> f64 {
        let g = c.gap_at(lambda, loss);
        if g.is_nan() {
            f64::INFINITY
        } else {
            g
        }
    };

    let mut bound = f64::NEG_INFINITY;
    if lambda_max > first.lambda {
        bound = bound.max(env(first, lambda_max).min(gap(first, lambda_max).max(first.gap)));
    } else {
        bound = bound.max(first.gap);
    }
    if lambda_min < last.lambda {
        bound = bound.max(env(last, lambda_min).min(gap(last, lambda_min).max(last.gap)));
    } else {
        bound = bound.max(last.gap);
    }
    for pair in certs.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let chord = chord_bound(a.gap, gap(a, b.lambda), b.gap, gap(b, a.lambda));
        bound = bound.max(interval_bound(a, b, &env).min(chord));
        if bound == f64::INFINITY {
            break;
        }
    }
    bound
}

/// `max_{s ∈ [0, 1]} min(A(s), B(s))` for the chords `A` from `a_lo` (s = 0) to `a_hi`
/// and `B` from `b_lo` to `b_hi`, with `s = 0` at the lower `λ`.
fn chord_bound(a_hi: f64, a_lo: f64, b_lo: f64, b_hi: f64) -> f64 {
    if !b_hi.is_finite() {
        return a_lo.max(a_hi);
    }
    if !a_lo.is_finite() {
        return b_lo.max(b_hi);
    }
    let at = |s: f64| (a_lo + s * (a_hi - a_lo)).min(b_lo + s * (b_hi - b_lo));
    let mut best = at(0.0).max(at(1.0));
    let slope = (a_hi - a_lo) - (b_hi - b_lo);
    if slope != 0.0 {
        let s = (b_lo - a_lo) / slope;
        if (0.0..=1.0).contains(&s) {
            // both chords agree at the crossing up to rounding; take the larger value
            best = best.max((a_lo + s * (a_hi - a_lo)).max(b_lo + s * (b_hi - b_lo)));
        }
    }
    best
}

fn interval_bound<F: Fn(&Certificate, f64) -> f64>(a: &Certificate, b: &Certificate, env: &F) -> f64 {
    // a.λ ≥ b.λ; A(λ) = env(a, λ) decreases in λ, B(λ) = env(b, λ) increases
    let (low, high) = (b.lambda, a.lambda);
    if low >= high {
        return a.gap.min(b.gap);
    }
    let a_low = env(a, low);
    if a_low <= b.gap {
        return a_low;
    }
    let b_high = env(b, high);
    if b_high <= a.gap {
        return b_high;
    }
    // A(lo) > B(lo) and A(hi) < B(hi) hold throughout
    let (mut lo, mut hi) = (low, high);
    let (mut a_lo, mut b_hi) = (a_low, b_high);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi {
            break;
        }
        let (am, bm) = (env(a, mid), env(b, mid));
        if am > bm {
            lo = mid;
            a_lo = am;
        } else {
            hi = mid;
            b_hi = bm;
        }
    }
    a_lo.min(b_hi)
}

/// Solves at `λ` with a warm start, converting solver failures into a partial result.
struct Runner<'a> {
    solver: CoordinateDescent<'a>,
    solver_cfg: SolverConfig,
    loss: &'a LossModel,
    cfg: PathConfig,
    lambda_min: f64,
    lambda_max: f64,
    certificates: Vec<Certificate>,
    steps: Vec<StepInfo>,
    total_epochs: usize,
    started: Instant,
}

impl<'a> Runner<'a> {
    fn new(
        x: &'a Design,
        loss: &'a LossModel,
        reg: &'a RegularizerModel,
        cfg: &PathConfig,
        solver: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let started = Instant::now();
        let lmax = match cfg.lambda_max {
            Some(l) => l,
            None => lambda_max(x, loss),
        };
        if !(lmax > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "λmax = {lmax}: the zero vector is optimal for every λ"
            )));
        }
        let lmin = match cfg.strategy {
            Strategy::Default { size, decades } => *default_grid(lmax, size, decades)?.last().expect("size ≥ 2"),
            _ => lmax / cfg.lambda_min_ratio,
        };
        let solver_cfg = SolverConfig {
            eps_c: cfg.eps_c,
            enforce_delta: cfg.enforce_delta,
            ..*solver
        };
        solver_cfg.validate()?;
        Ok(Self {
            solver: CoordinateDescent::new(x, loss, reg)?,
            solver_cfg,
            loss,
            cfg: *cfg,
            lambda_min: lmin,
            lambda_max: lmax,
            certificates: Vec::new(),
            steps: Vec::new(),
            total_epochs: 0,
            started,
        })
    }

    fn solve(&mut self, lambda: f64) -> Result<&Certificate> {
        if self.certificates.len() >= self.cfg.max_points {
            let cause = Error::InvalidConfig(format!("more than {} grid points", self.cfg.max_points));
            return Err(self.interrupt(cause));
        }
        let warm = self.certificates.last().map(|c| c.beta.clone());
        match self.solver.fit(lambda, warm.as_deref(), &self.solver_cfg) {
            Ok(out) => {
                self.total_epochs += out.epochs;
                let (rho_left, rho_right) = steps(&out.certificate, self.cfg.eps, self.loss, self.cfg.root_tol);
                self.steps.push(StepInfo {
                    rho_left,
                    rho_right,
                    rho_tilde_right: None,
                    rho_bilateral: None,
                });
                self.certificates.push(out.certificate);
                Ok(self.certificates.last().expect("just pushed"))
            }
            Err(e) => Err(self.interrupt(e)),
        }
    }

    fn interrupt(&mut self, cause: Error) -> Error {
        let partial = std::mem::replace(self, self.empty_clone()).finish(None);
        Error::PathInterrupted {
            partial: Box::new(partial),
            cause: Box::new(cause),
        }
    }

    fn empty_clone(&self) -> Self {
        Self {
            solver: self.solver.clone(),
            solver_cfg: self.solver_cfg,
            loss: self.loss,
            cfg: self.cfg,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            certificates: Vec::new(),
            steps: Vec::new(),
            total_epochs: 0,
            started: self.started,
        }
    }

    fn finish(self, uniform: Option<UniformInfo>) -> PathResult {
        let certified_eps = grid_error(&self.certificates, self.lambda_min, self.lambda_max, self.loss);
        let complexity_bound = self.certificates.first().and_then(|c0| {
            complexity_estimate(self.loss, c0, self.cfg.eps, self.cfg.eps_c, self.lambda_min, self.lambda_max)
        });
        PathResult {
            strategy: self.cfg.strategy,
            eps: self.cfg.eps,
            eps_c: self.cfg.eps_c,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            certificates: self.certificates,
            steps: self.steps,
            certified_eps,
            uniform,
            complexity_bound,
            total_epochs: self.total_epochs,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        }
    }
}

/// Builds a path with the strategy in `cfg`.
pub fn build_path(
    x: &Design,
    loss: &LossModel,
    reg: &RegularizerModel,
    cfg: &PathConfig,
    solver: &SolverConfig,
) -> Result<PathResult> {
    match cfg.strategy {
        Strategy::Unilateral | Strategy::Bilateral => training_path(x, loss, reg, cfg, solver),
        Strategy::UniformUnilateral => uniform_grid(x, loss, reg, cfg, UniformMode::Unilateral, solver),
        Strategy::UniformBilateral => uniform_grid(x, loss, reg, cfg, UniformMode::Bilateral, solver),
        Strategy::Default { .. } => fixed_grid_path(x, loss, reg, cfg, solver),
    }
}

/// Adaptive path: solve, step left by `ρ^ℓ` (or `ρ^(b)`), repeat until `λmin`.
pub fn training_path(
    x: &Design,
    loss: &LossModel,
    reg: &RegularizerModel,
    cfg: &PathConfig,
    solver: &SolverConfig,
) -> Result<PathResult> {
    let bilateral = match cfg.strategy {
        Strategy::Unilateral => false,
        Strategy::Bilateral => true,
        other => {
            return Err(Error::InvalidConfig(format!(
                "training_path expects an adaptive strategy, got {}",
                other.name()
            )))
        }
    };
    let mut run = Runner::new(x, loss, reg, cfg, solver)?;
    if bilateral {
        // fail before solving anything
        loss.primal_modulus_inverses()?;
    }
    let mut lambda = run.lambda_max;
    loop {
        let cert = run.solve(lambda)?.clone();
        if lambda <= run.lambda_min {
            break;
        }
        let info = run.steps.last_mut().expect("solved");
        let rho = if bilateral {
            let constants = bilateral_constants(&cert, info.rho_left, cfg.eps_c, loss)?;
            let rho_tilde_right = constants.right_step(cfg.eps, cfg.root_tol);
            let rho_b = bilateral_combine(info.rho_left, rho_tilde_right);
            info.rho_tilde_right = Some(rho_tilde_right);
            info.rho_bilateral = Some(rho_b);
            rho_b
        } else {
            info.rho_left
        };
        let next = lambda * (1.0 - rho);
        lambda = if next > run.lambda_min && next < lambda {
            next
        } else if next >= lambda {
            // a zero step cannot make progress; ε_c < ε rules this out in exact arithmetic
            let cause = Error::InvalidConfig(format!("zero step at λ = {lambda}"));
            return Err(run.interrupt(cause));
        } else {
            run.lambda_min
        };
    }
    Ok(run.finish(None))
}

/// Geometric grid `λ_{t+1} = λ_t(1 − ρ₀)` fixed after the single solve at `λmax`.
pub fn uniform_grid(
    x: &Design,
    loss: &LossModel,
    reg: &RegularizerModel,
    cfg: &PathConfig,
    mode: UniformMode,
    solver: &SolverConfig,
) -> Result<PathResult> {
    loss.primal_modulus_inverses()?;
    let mut run = Runner::new(x, loss, reg, cfg, solver)?;
    let cert0 = run.solve(run.lambda_max)?.clone();
    let rho_left0 = run.steps[0].rho_left;
    let constants = bilateral_constants(&cert0, rho_left0, cfg.eps_c, loss)?;
    let rho_tilde_left = constants.left_step(cfg.eps, cfg.root_tol);
    let rho0 = match mode {
        UniformMode::Unilateral => rho_tilde_left,
        UniformMode::Bilateral => {
            let rho_tilde_right = constants.right_step(cfg.eps, cfg.root_tol);
            run.steps[0].rho_tilde_right = Some(rho_tilde_right);
            bilateral_combine(rho_tilde_left, rho_tilde_right)
        }
    };
    if !(rho0 > 0.0) {
        let cause = Error::InvalidConfig("uniform step ρ₀ is zero".into());
        return Err(run.interrupt(cause));
    }
    let ratio = run.lambda_max / run.lambda_min;
    let t_formula = uniform_cardinality(rho0, ratio);
    if t_formula >= cfg.max_points {
        let cause = Error::InvalidConfig(format!("uniform grid needs {t_formula} points"));
        return Err(run.interrupt(cause));
    }
    for k in 1..=t_formula {
        let lambda = (run.lambda_max * (1.0 - rho0).powi(k as i32)).max(run.lambda_min);
        run.solve(lambda)?;
    }
    // the last point must reach λmin through its own bound
    let last = run.certificates.last().expect("solved").clone();
    let mut appended_endpoint = false;
    if last.lambda > run.lambda_min {
        let reach = q_bound(&last, 1.0 - run.lambda_min / last.lambda, Side::Upper, loss);
        if !(reach <= cfg.eps) {
            run.solve(run.lambda_min)?;
            appended_endpoint = true;
        }
    }
    Ok(run.finish(Some(UniformInfo {
        rho0,
        t_formula,
        appended_endpoint,
    })))
}

/// Solves on the default geometric grid and certifies its error.
pub fn fixed_grid_path(
    x: &Design,
    loss: &LossModel,
    reg: &RegularizerModel,
    cfg: &PathConfig,
    solver: &SolverConfig,
) -> Result<PathResult> {
    let Strategy::Default { size, decades } = cfg.strategy else {
        return Err(Error::InvalidConfig("fixed_grid_path expects the default strategy".into()));
    };
    let mut run = Runner::new(x, loss, reg, cfg, solver)?;
    for lambda in default_grid(run.lambda_max, size, decades)? {
        run.solve(lambda)?;
    }
    Ok(run.finish(None))
}
