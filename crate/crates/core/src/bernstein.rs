//! Concentration-bound arithmetic for the vector Bernstein inequality:
//! tail probabilities, the radius `ε` for a confidence level, and the
//! `σ`/`η` constants of a sampling plan.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Variants of the tail exponent factor, ordered `T ≥ S ≥ R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WVariant {
    T,
    S,
    R,
}

pub fn w_factor(x: f64, variant: WVariant) -> Result<f64> {
    if !(x >= 0.0) {
        return invalid(format!("w-factor argument must be non-negative, got {x}"));
    }
    Ok(match variant {
        WVariant::T => w_t(x),
        WVariant::S => 3.0 / (3.0 + x),
        WVariant::R => 0.75 / x.max(1.0),
    })
}

fn w_t(x: f64) -> f64 {
    if x < 1e-4 {
        // series 1 − x/3 + x²/6 − x³/10
        1.0 - x / 3.0 + x * x / 6.0 - x * x * x / 10.0
    } else {
        2.0 / (x * x) * ((x + 1.0) * x.ln_1p() - x)
    }
}

/// Parameters of a vector Bernstein tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailParams {
    pub n: f64,
    pub sigma: f64,
    pub eta: f64,
    pub delta: f64,
}

impl TailParams {
    pub fn new(n: f64, sigma: f64, eta: f64, delta: f64) -> Result<Self> {
        if !(n >= 1.0) || !(sigma > 0.0) || !(eta > 0.0) {
            return invalid("N ≥ 1, σ > 0 and η > 0 required");
        }
        check_delta(delta)?;
        Ok(Self { n, sigma, eta, delta })
    }

    pub fn u(&self) -> f64 {
        u_param(self.n, self.delta, self.eta)
    }

    pub fn epsilon(&self) -> f64 {
        epsilon_from_u(self.u(), self.eta)
    }

    pub fn tail_bound(&self, epsilon: f64) -> f64 {
        tail_bound(self.n, self.eta, epsilon)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("confidence deficit δ must lie in (0,1), got {delta}"));
    }
    Ok(())
}

/// `min(1, 8 exp[−(Nε²/2)·3/(3+ηε)])`.
pub fn tail_bound(n: f64, eta: f64, epsilon: f64) -> f64 {
    (8.0 * (-(n * epsilon * epsilon / 2.0) * 3.0 / (3.0 + eta * epsilon)).exp()).min(1.0)
}

fn u_param(n: f64, delta: f64, eta: f64) -> f64 {
    eta * eta * (8.0 / delta).ln() / (18.0 * n)
}

/// `ε = (6/η)√u(√u + √(u+1))`.
pub fn epsilon_from_u(u: f64, eta: f64) -> f64 {
    6.0 / eta * u.sqrt() * (u.sqrt() + (u + 1.0).sqrt())
}

/// The `ε` at which [`tail_bound`] equals `δ`.
pub fn epsilon_for_confidence(n: f64, delta: f64, eta: f64) -> Result<f64> {
    TailParams::new(n, 1.0, eta, delta).map(|p| p.epsilon())
}

/// Spectral-norm tail `min(1, 2d exp[−(Nε²/2)·w̃_S(εη)])`.
pub fn tail_bound_spectral(n: f64, eta: f64, epsilon: f64, dim: usize) -> f64 {
    let w = 3.0 / (3.0 + eta * epsilon);
    (2.0 * dim as f64 * (-(n * epsilon * epsilon / 2.0) * w).exp()).min(1.0)
}

/// The `ε` at which [`tail_bound_spectral`] equals `δ`: `u = η²log(2d/δ)/(18N)`.
pub fn epsilon_for_confidence_spectral(n: f64, delta: f64, eta: f64, dim: usize) -> Result<f64> {
    TailParams::new(n, 1.0, eta, delta)?;
    let u = eta * eta * (2.0 * dim as f64 / delta).ln() / (18.0 * n);
    Ok(epsilon_from_u(u, eta))
}

/// Per-setting data of a multinomial sampling plan.
#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialModel {
    pub gammas: Vec<f64>,
    pub weights: Vec<f64>,
    pub outcome_counts: Vec<usize>,
}

impl MultinomialModel {
    pub fn new(gammas: Vec<f64>, weights: Vec<f64>, outcome_counts: Vec<usize>) -> Result<Self> {
        let m = gammas.len();
        if weights.len() != m || outcome_counts.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: weights.len().min(outcome_counts.len()),
            });
        }
        if gammas.iter().any(|g| !(*g >= 0.0)) || weights.iter().any(|q| !(*q >= 0.0)) {
            return invalid("γ_s and q_s must be non-negative");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSum(total));
        }
        Ok(Self {
            gammas,
            weights,
            outcome_counts,
        })
    }
}

/// `σ = √(Σ γ_s²/q_s)` and `η = (2/σ) max γ_s/q_s`.
pub fn sigma_eta(model: &MultinomialModel) -> Result<(f64, f64)> {
    let mut s2 = 0.0;
    let mut ratio_max: f64 = 0.0;
    for (g, q) in model.gammas.iter().zip(&model.weights) {
        if *g == 0.0 {
            continue;
        }
        if *q == 0.0 {
            return invalid("setting never sampled but contributes");
        }
        s2 += g * g / q;
        ratio_max = ratio_max.max(g / q);
    }
    if s2 == 0.0 {
        return invalid("all γ_s vanish");
    }
    let sigma = s2.sqrt();
    Ok((sigma, 2.0 * ratio_max / sigma))
}

/// `q_s = γ_s / Σ_t γ_t`.
pub fn optimal_sampling(gammas: &[f64]) -> Result<Vec<f64>> {
    if gammas.iter().any(|g| !(*g >= 0.0)) {
        return invalid("γ_s must be non-negative");
    }
    let total: f64 = gammas.iter().sum();
    if total <= 0.0 {
        return invalid("at least one γ_s must be positive");
    }
    Ok(gammas.iter().map(|g| g / total).collect())
}

/// `S = p·diag(GᵀG) − ‖Gp‖²`, the exact variance of `G` applied to one
/// multinomial draw.
pub fn exact_variance_term(g: &DMatrix<f64>, p: &[f64]) -> f64 {
    let mut first = 0.0;
    let mut mean = nalgebra::DVector::zeros(g.nrows());
    for (a, pa) in p.iter().enumerate() {
        let col = g.column(a);
        first += pa * col.norm_squared();
        mean.axpy(*pa, &col, 1.0);
    }
    (first - mean.norm_squared()).max(0.0)
}

/// Exponent `−(t²/2v)·3/(3 + tL/v)` of the scalar Bernstein inequality
/// with variance `v` and range `L`.
pub fn bernstein_exponent(v: f64, l: f64, t: f64) -> f64 {
    -(t * t / (2.0 * v)) * 3.0 / (3.0 + t * l / v)
}

/// `λ = √Λ_max = 2 max_s γ_s`.
pub fn lambda_bound(gammas: &[f64]) -> f64 {
    2.0 * gammas.iter().cloned().fold(0.0, f64::max)
}
