use serde::{Deserialize, Serialize};

use crate::nn::tensor::{Float, ParamTensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment buffers, one pair per parameter tensor.
#[derive(Debug, Clone, Default)]
pub struct AdamState<T = f32> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Float> AdamState<T> {
    pub fn new() -> Self {
        AdamState { m: Vec::new(), v: Vec::new() }
    }
}

/// Bias-corrected Adam update at step `t` (1-based) using each parameter's
/// accumulated gradient. Gradients are left in place.
pub fn adam_step<T: Float>(params: &mut [&mut ParamTensor<T>], state: &mut AdamState<T>, cfg: &AdamConfig, t: u64) {
    assert!(t >= 1, "adam step index is 1-based");
    if state.m.len() != params.len() {
        state.m = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
        state.v = state.m.clone();
    }
    let b1 = T::from_f64(cfg.beta1);
    let b2 = T::from_f64(cfg.beta2);
    let one = T::one();
    let corr1 = T::from_f64(1.0 - cfg.beta1.powi(t as i32));
    let corr2 = T::from_f64(1.0 - cfg.beta2.powi(t as i32));
    let lr = T::from_f64(cfg.lr);
    let eps = T::from_f64(cfg.eps);

    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        let grads = p.grad.data().to_vec();
        for (((w, &g), m), v) in p.value.data_mut().iter_mut().zip(&grads).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *w = *w - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
