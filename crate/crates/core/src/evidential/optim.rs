use super::MlpParams;
use crate::error::{arg, Result};

/// AdamW hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { lr: 1e-3, weight_decay: 0.0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment accumulators and step count for AdamW.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub config: AdamWConfig,
    pub first: MlpParams,
    pub second: MlpParams,
    pub step: u64,
}

impl OptimState {
    pub fn new(params: &MlpParams, config: AdamWConfig) -> Self {
        Self { config, first: params.zeros_like(), second: params.zeros_like(), step: 0 }
    }
}

/// One AdamW step with decoupled weight decay and bias correction:
///
/// ```text
/// theta <- theta * (1 - lr * wd)
/// m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
/// theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// ```
pub fn optim_step(params: &mut MlpParams, grads: &MlpParams, state: &mut OptimState) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.first) {
        return arg("parameter, gradient and optimizer shapes differ");
    }
    state.step += 1;
    let AdamWConfig { lr, weight_decay, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let decay = 1.0 - lr * weight_decay;
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads.iter())
        .zip(state.first.iter_mut())
        .zip(state.second.iter_mut())
    {
        *p *= decay;
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
    }
    Ok(())
}
