//! Oracles shared by the integration tests. Nothing here calls the loss or
//! regularizer code under test.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safegrid::certify::Certificate;
use safegrid::linalg::{DenseMatrix, Design};

/// Dual infeasibility tolerated as rounding in `‖Xᵀθ‖_∞ ≤ 1`.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    Squared,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    L1,
    Enet(f64),
}

/// Dense row-major copy of a small problem, kept separate from the library types.
#[derive(Debug, Clone)]
pub struct Problem {
    pub rows: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub loss: Loss,
    pub penalty: Penalty,
}

impl Problem {
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<f64>, loss: Loss, penalty: Penalty) -> Self {
        Self { rows, y, loss, penalty }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn design(&self) -> Design {
        DenseMatrix::from_rows(&self.rows).unwrap().into()
    }

    pub fn xb(&self, beta: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().zip(beta).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn xt(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p()];
        for (r, vi) in self.rows.iter().zip(v) {
            for (o, a) in out.iter_mut().zip(r) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn f(&self, z: &[f64]) -> f64 {
        match self.loss {
            Loss::Squared => 0.5 * self.y.iter().zip(z).map(|(y, z)| (y - z).powi(2)).sum::<f64>(),
            Loss::Logistic => self
                .y
                .iter()
                .zip(z)
                .map(|(y, &z)| {
                    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                    softplus - y * z
                })
                .sum(),
        }
    }

    pub fn grad_f(&self, z: &[f64]) -> Vec<f64> {
        match self.loss {
            Loss::Squared => z.iter().zip(&self.y).map(|(z, y)| z - y).collect(),
            Loss::Logistic => z.iter().zip(&self.y).map(|(&z, y)| 1.0 / (1.0 + (-z).exp()) - y).collect(),
        }
    }

    /// `f*(u)`, `+∞` outside the domain.
    pub fn f_conj(&self, u: &[f64]) -> f64 {
        match self.loss {
            Loss::Squared => u.iter().zip(&self.y).map(|(u, y)| 0.5 * u * u + u * y).sum(),
            Loss::Logistic => {
                let mut s = 0.0;
                for (u, y) in u.iter().zip(&self.y) {
                    let v = u + y;
                    if !(0.0..=1.0).contains(&v) {
                        return f64::INFINITY;
                    }
                    let xlogx = |t: f64| if t > 0.0 { t * t.ln() } else { 0.0 };
                    s += xlogx(v) + xlogx(1.0 - v);
                }
                s
            }
        }
    }

    pub fn omega(&self, beta: &[f64]) -> f64 {
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        match self.penalty {
            Penalty::L1 => l1,
            Penalty::Enet(g) => l1 + 0.5 * g * beta.iter().map(|b| b * b).sum::<f64>(),
        }
    }

    pub fn omega_conj(&self, v: &[f64]) -> f64 {
        match self.penalty {
            Penalty::L1 => {
                if v.iter().all(|x| x.abs() <= 1.0 + FEAS_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Penalty::Enet(g) => v.iter().map(|x| (x.abs() - 1.0).max(0.0).powi(2)).sum::<f64>() / (2.0 * g),
        }
    }

    pub fn primal(&self, beta: &[f64], lambda: f64) -> f64 {
        self.f(&self.xb(beta)) + lambda * self.omega(beta)
    }

    /// `‖Xᵀ∇f(0)‖_∞`
    pub fn lambda_max(&self) -> f64 {
        let g = self.grad_f(&vec![0.0; self.n()]);
        self.xt(&g).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self) -> f64 {
        1.0 + self.f(&vec![0.0; self.n()])
    }

    /// Gap of `(β, θ)` at `λ` from scratch.
    pub fn gap(&self, beta: &[f64], theta: &[f64], lambda: f64) -> f64 {
        let u: Vec<f64> = theta.iter().map(|t| -lambda * t).collect();
        self.f(&self.xb(beta)) + self.f_conj(&u) + lambda * (self.omega(beta) + self.omega_conj(&self.xt(theta)))
    }

    pub fn scanner(&self, certs: &[Certificate]) -> GapScanner<'_> {
        GapScanner::new(self, certs)
    }
}

/// Evaluates `Gap_λ(β_t, θ_t)` for many λ with the λ-free parts cached.
pub struct GapScanner<'a> {
    problem: &'a Problem,
    parts: Vec<(f64, f64, Vec<f64>)>,
}

impl<'a> GapScanner<'a> {
    pub fn new(problem: &'a Problem, certs: &[Certificate]) -> Self {
        let parts = certs
            .iter()
            .map(|c| {
                let f = problem.f(&problem.xb(&c.beta));
                let reg = problem.omega(&c.beta) + problem.omega_conj(&problem.xt(&c.theta));
                (f, reg, c.theta.clone())
            })
            .collect();
        Self { problem, parts }
    }

    pub fn gap(&self, t: usize, lambda: f64) -> f64 {
        let (f, reg, theta) = &self.parts[t];
        let u: Vec<f64> = theta.iter().map(|x| -lambda * x).collect();
        f + self.problem.f_conj(&u) + lambda * reg
    }

    pub fn min_gap(&self, lambda: f64) -> f64 {
        (0..self.parts.len()).map(|t| self.gap(t, lambda)).fold(f64::INFINITY, f64::min)
    }

    /// Largest `min_t Gap_λ` over `count` geometrically spaced λ in `[lo, hi]`.
    pub fn max_min_gap(&self, lo: f64, hi: f64, count: usize) -> f64 {
        geometric(lo, hi, count).into_iter().map(|l| self.min_gap(l)).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (lo / hi).ln() / (count - 1) as f64;
    (0..count).map(|k| if k + 1 == count { lo } else { hi * (step * k as f64).exp() }).collect()
}

/// Gaussian design with a sparse ground truth and squared-loss targets.
pub fn random_regression(rng: &mut ChaCha8Rng, n: usize, p: usize, penalty: Penalty) -> Problem {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| gauss(rng)).collect()).collect();
    let truth: Vec<f64> = (0..p).map(|j| if j < 3.min(p) { rng.random_range(-3.0..3.0) } else { 0.0 }).collect();
    let mut y: Vec<f64> = rows.iter().map(|r| r.iter().zip(&truth).map(|(a, b)| a * b).sum()).collect();
    for v in &mut y {
        *v += 0.5 * gauss(rng);
    }
    Problem::new(rows, y, Loss::Squared, penalty)
}

/// Gaussian design with `{0, 1}` labels drawn from a sparse logistic model.
pub fn random_classification(rng: &mut ChaCha8Rng, n: usize, p: usize, penalty: Penalty) -> Problem {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| gauss(rng)).collect()).collect();
    let truth: Vec<f64> = (0..p).map(|j| if j < 3.min(p) { rng.random_range(-2.0..2.0) } else { 0.0 }).collect();
    let y = rows
        .iter()
        .map(|r| {
            let z: f64 = r.iter().zip(&truth).map(|(a, b)| a * b).sum();
            if rng.random::<f64>() < 1.0 / (1.0 + (-z).exp()) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Problem::new(rows, y, Loss::Logistic, penalty)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller keeps the oracle free of the generator code under test
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Soft-thresholding `sign(a)·max(|a| − t, 0)`.
pub fn soft_threshold(a: f64, t: f64) -> f64 {
    a.signum() * (a.abs() - t).max(0.0)
}
