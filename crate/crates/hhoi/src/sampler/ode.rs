//! Fixed-step RK4 integration and single-sample probability-flow sampling.

use crate::diffusion::{ConditionEmbedding, NoiseSchedule, ScoreNet};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Classic RK4 over `t ∈ [t_start, t_end]` (either direction) with a
/// fixed step count. `drift(state, t)` returns `d state / dt`.
pub fn rk4_integrate(
    mut state: Vec<f64>,
    t_start: f64,
    t_end: f64,
    steps: usize,
    mut drift: impl FnMut(&[f64], f64) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    assert!(steps > 0, "need at least one step");
    let dt = (t_end - t_start) / steps as f64;
    let dim = state.len();
    for i in 0..steps {
        let t = t_start + dt * i as f64;
        let k1 = drift(&state, t)?;
        let mid1: Vec<f64> = (0..dim).map(|j| state[j] + 0.5 * dt * k1[j]).collect();
        let k2 = drift(&mid1, t + 0.5 * dt)?;
        let mid2: Vec<f64> = (0..dim).map(|j| state[j] + 0.5 * dt * k2[j]).collect();
        let k3 = drift(&mid2, t + 0.5 * dt)?;
        let last: Vec<f64> = (0..dim).map(|j| state[j] + dt * k3[j]).collect();
        let k4 = drift(&last, t + dt)?;
        for j in 0..dim {
            state[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteIntegration { step: i, t: t + dt });
        }
    }
    Ok(state)
}

/// Integrate the reverse-time probability-flow ODE for one sample.
///
/// Initializes `φ(1) ~ N(0, σ_max² I)` from `rng` and integrates
/// `dφ/dt = −σ(t)·σ̇(t)·score(φ, t)` from `t = 1` down to `t = ε` with
/// `steps` RK4 steps. Deterministic given the rng state.
pub fn pf_ode_sample(
    score: impl FnMut(&[f64], f64) -> Result<Vec<f64>>,
    sched: &NoiseSchedule,
    dim: usize,
    rng: &mut Rng,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut score = score;
    let init: Vec<f64> = (0..dim).map(|_| sched.sigma_max * rng.normal()).collect();
    let sched = *sched;
    rk4_integrate(init, 1.0, sched.epsilon, steps, move |phi, t| {
        let factor = -sched.sigma(t)? * sched.sigma_dot(t)?;
        let mut s = score(phi, t)?;
        for v in s.iter_mut() {
            *v *= factor;
        }
        Ok(s)
    })
}

/// Probability-flow sampling under a trained network and one condition.
pub fn pf_ode_sample_with_net(
    net: &ScoreNet,
    cond: &ConditionEmbedding,
    rng: &mut Rng,
    steps: usize,
) -> Result<Vec<f64>> {
    let sched = *net.schedule();
    pf_ode_sample(
        |phi, t| net.score(phi, t, cond),
        &sched,
        net.config().sample_dim(),
        rng,
        steps,
    )
}
