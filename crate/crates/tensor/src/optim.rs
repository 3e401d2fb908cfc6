use serde::{Deserialize, Serialize};

use crate::params::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// AdamW with decoupled weight decay: the decay term is applied directly to
/// the weights instead of being folded into the gradient.
pub struct AdamW {
    pub cfg: AdamWConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step_count: u64,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig) -> Self {
        Self {
            cfg,
            m: Vec::new(),
            v: Vec::new(),
            step_count: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_count
    }

    /// Apply one update from the gradients currently held by the store.
    /// Parameters without a gradient are skipped entirely, so a head that
    /// never touched the tape is neither decayed nor given stale momentum.
    pub fn step(&mut self, store: &mut ParamStore) {
        if self.m.is_empty() {
            for (_, t) in store.iter() {
                self.m.push(vec![0.0; t.numel()]);
                self.v.push(vec![0.0; t.numel()]);
            }
        }
        assert_eq!(
            self.m.len(),
            store.len(),
            "optimizer state does not match parameter count"
        );
        self.step_count += 1;
        let t = self.step_count as i32;
        let c = self.cfg;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        for (idx, (_, tensor)) in store.iter_mut().enumerate() {
            let Some(grad) = tensor.grad.as_ref() else {
                continue;
            };
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for i in 0..tensor.data.len() {
                let g = grad[i];
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                tensor.data[i] -=
                    c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * tensor.data[i]);
            }
        }
    }
}
