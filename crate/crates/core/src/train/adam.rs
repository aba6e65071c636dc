use alloc::vec;
use alloc::vec::Vec;

use super::{Gradients, TrainConfig};
use crate::prior::PriorModel;

/// Rescales `grads` in place so its global L2 norm is at most `clip`;
/// returns the norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, clip: f64) -> f64 {
    let norm = grads.norm();
    if norm > clip && norm > 0.0 {
        let scale = clip / norm;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}

/// First and second moment estimates for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl AdamState {
    pub fn new(model: &PriorModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Self { first: zeros.clone(), second: zeros, steps: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Clips `grads` to `config.clip_norm`, then applies one bias-corrected
    /// Adam update at `learning_rate`. Returns the pre-clip gradient norm.
    pub fn step(&mut self, model: &mut PriorModel, grads: &mut Gradients, config: &TrainConfig, learning_rate: f64) -> f64 {
        let norm = clip_global_norm(grads, config.clip_norm);
        self.steps += 1;
        let t = self.steps as f64;
        let c1 = 1.0 - libm::pow(config.beta1, t);
        let c2 = 1.0 - libm::pow(config.beta2, t);
        let tensors = model.tensors_mut().into_iter().zip(grads.tensors());
        for ((params, g), (m, v)) in tensors.zip(self.first.iter_mut().zip(self.second.iter_mut())) {
            for i in 0..params.len() {
                m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
                v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= learning_rate * m_hat / (libm::sqrt(v_hat) + config.adam_epsilon);
            }
        }
        norm
    }
}
