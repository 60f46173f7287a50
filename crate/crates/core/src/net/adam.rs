use serde::{Deserialize, Serialize};

use super::{Gradients, NetError, NetParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates and the number of applied updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }
}

/// One bias-corrected Adam step. Returns `Ok(false)` (and leaves everything untouched) when the
/// gradient contains a non-finite value.
pub fn adam_update(
    params: &mut NetParams<f32>,
    grads: &Gradients<f32>,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<bool, NetError> {
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(NetError::ShapeMismatch {
            expected: n,
            got: grads.len().min(state.m.len()).min(state.v.len()),
        });
    }
    if !grads.is_finite() {
        log::warn!("skipping Adam update {}: non-finite gradient", state.step + 1);
        return Ok(false);
    }
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2) = (cfg.beta1 as f32, cfg.beta2 as f32);
    // bias corrections folded into the step size and epsilon
    let c1 = 1.0 - cfg.beta1.powf(t);
    let c2 = 1.0 - cfg.beta2.powf(t);
    let step_size = (lr * c2.sqrt() / c1) as f32;
    let eps = (cfg.epsilon * c2.sqrt()) as f32;
    for (((p, &g), m), v) in params
        .as_mut_slice()
        .iter_mut()
        .zip(grads.as_slice())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        *p -= step_size * *m / (v.sqrt() + eps);
    }
    Ok(true)
}
