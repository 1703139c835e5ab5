//! ADAM with bias-corrected moment estimates.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Moments { m: vec![0.0; len], v: vec![0.0; len] }
    }
}

/// Optimizer state shared by all tensors: the hyperparameters and the step
/// counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    params: AdamParams,
    step: u64,
    // beta^t, kept as running products
    b1_pow: f64,
    b2_pow: f64,
}

impl Adam {
    pub fn new(params: AdamParams) -> Self {
        Adam { params, step: 0, b1_pow: 1.0, b2_pow: 1.0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Advances the step counter; call once per optimizer step before the
    /// per-tensor [`Adam::update`] calls.
    pub fn begin_step(&mut self) {
        self.step += 1;
        self.b1_pow *= self.params.beta1;
        self.b2_pow *= self.params.beta2;
    }

    pub fn update(&self, moments: &mut Moments, params: &mut [f64], grads: &[f64]) {
        debug_assert!(self.step > 0, "begin_step not called");
        let AdamParams { learning_rate, beta1, beta2, eps } = self.params;
        let c1 = 1.0 - self.b1_pow;
        let c2 = 1.0 - self.b2_pow;
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(moments.m.iter_mut()).zip(moments.v.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }
}
