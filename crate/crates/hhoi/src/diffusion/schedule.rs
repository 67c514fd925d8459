//! The variance-exploding noise schedule.
//!
//! `σ(t) = σ_min · (σ_max/σ_min)^t` for `t ∈ [ε, 1]`. The time derivative
//! used by the probability-flow drift is `σ̇(t) = σ(t) · ln(σ_max/σ_min)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Minimal integration time; the reverse ODE stops here.
    pub epsilon: f64,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        NoiseSchedule {
            sigma_min: 0.01,
            sigma_max: 10.0,
            epsilon: 1e-3,
        }
    }
}

impl NoiseSchedule {
    pub fn new(sigma_min: f64, sigma_max: f64, epsilon: f64) -> Result<Self> {
        if !(sigma_min > 0.0 && sigma_min < sigma_max) {
            return Err(Error::validation(format!(
                "need 0 < sigma_min < sigma_max, got ({sigma_min}, {sigma_max})"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::validation(format!(
                "need 0 < epsilon < 1, got {epsilon}"
            )));
        }
        Ok(NoiseSchedule {
            sigma_min,
            sigma_max,
            epsilon,
        })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        // a hair of slack for accumulated integrator arithmetic
        if !(self.epsilon - 1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(Error::validation(format!(
                "time {t} outside [{}, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.sigma_min * (self.sigma_max / self.sigma_min).powf(t))
    }

    /// `dσ/dt`.
    pub fn sigma_dot(&self, t: f64) -> Result<f64> {
        Ok(self.sigma(t)? * (self.sigma_max / self.sigma_min).ln())
    }
}

/// Add schedule noise: `φ_t = φ + σ(t)·η` with standard-normal `η`.
pub fn perturb(phi: &[f64], t: f64, sched: &NoiseSchedule, rng: &mut Rng) -> Result<Vec<f64>> {
    let sigma = sched.sigma(t)?;
    Ok(phi.iter().map(|v| v + sigma * rng.normal()).collect())
}

/// The denoising-score-matching regression target `(φ − φ_t)/σ(t)²`.
pub fn dsm_target(phi: &[f64], phi_t: &[f64], t: f64, sched: &NoiseSchedule) -> Result<Vec<f64>> {
    if phi.len() != phi_t.len() {
        return Err(Error::Shape {
            context: "dsm_target",
            expected: phi.len(),
            got: phi_t.len(),
        });
    }
    let sigma_sq = sched.sigma(t)?.powi(2);
    Ok(phi
        .iter()
        .zip(phi_t)
        .map(|(a, b)| (a - b) / sigma_sq)
        .collect())
}
