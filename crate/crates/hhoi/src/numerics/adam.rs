//! Adam with the shared step-decayed learning-rate schedule.
//!
//! Every trainable component uses the same schedule: the rate starts at
//! 1e-2, decays by 0.999 each optimizer step and never drops below 7e-4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lr_init: f64,
    pub lr_decay: f64,
    pub lr_floor: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr_init: 1e-2,
            lr_decay: 0.999,
            lr_floor: 7e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    steps: u64,
    config: AdamConfig,
}

impl AdamState {
    pub fn new(dim: usize, config: AdamConfig) -> Self {
        AdamState {
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            steps: 0,
            config,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// `max(floor, init · decay^steps)` — exact, not accumulated.
    pub fn learning_rate(&self) -> f64 {
        let decayed = self.config.lr_init * self.config.lr_decay.powi(self.steps as i32);
        decayed.max(self.config.lr_floor)
    }

    /// One optimizer step in place. `params` and `grads` must match the
    /// state dimension; non-finite gradients abort with the step index.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::Shape {
                context: "AdamState::step",
                expected: self.first_moment.len(),
                got: grads.len(),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteTraining {
                epoch: 0,
                step: self.steps as usize + 1,
            });
        }
        self.steps += 1;
        let lr = self.learning_rate();
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.steps as i32);
        let bc2 = 1.0 - c.beta2.powi(self.steps as i32);
        for i in 0..params.len() {
            let g = grads[i];
            let m = &mut self.first_moment[i];
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            let v = &mut self.second_moment[i];
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + c.epsilon);
        }
        Ok(())
    }
}
