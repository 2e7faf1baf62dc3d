//! Adam with bias-corrected moment estimates.

use super::{Gradients, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: ModelParams,
    pub second_moment: ModelParams,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

pub fn adam_update(
    state: &mut AdamState,
    params: &mut ModelParams,
    grads: &Gradients,
    learning_rate: f64,
) {
    state.step += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    let buffers = params.buffers_mut().zip(grads.buffers()).zip(
        state
            .first_moment
            .buffers_mut()
            .zip(state.second_moment.buffers_mut()),
    );
    for ((p, g), (m, v)) in buffers {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
