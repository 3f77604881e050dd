use serde::{Deserialize, Serialize};

use super::array::DenseArray;
use super::params::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient; `λ·p` joins the gradient of every decaying slot.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-5,
        }
    }
}

/// Moments aligned with the store's slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimState {
    pub config: AdamConfig,
    pub m: Vec<DenseArray>,
    pub v: Vec<DenseArray>,
    pub step: u64,
}

impl OptimState {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<DenseArray> = (0..store.len())
            .map(|s| {
                let (r, c) = store.value(s).shape();
                DenseArray::zeros(r, c)
            })
            .collect();
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    /// One bias-corrected Adam update of every slot.
    pub fn step(&mut self, store: &mut ParamStore, grads: &[DenseArray]) {
        assert_eq!(grads.len(), store.len(), "one gradient per parameter slot");
        let c = self.config;
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for s in 0..store.len() {
            let decay = if store.decays(s) { c.weight_decay } else { 0.0 };
            let (m, v) = (self.m[s].as_mut_slice(), self.v[s].as_mut_slice());
            let g = grads[s].as_slice();
            let p = store.value_mut(s).as_mut_slice();
            assert_eq!(p.len(), g.len(), "gradient shape mismatch");
            for i in 0..p.len() {
                let gi = g[i] + decay * p[i];
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
                p[i] -= c.lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + c.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("w", DenseArray::new(1, 3, vec![v, -v, 2.0 * v]));
        s
    }

    #[test]
    fn zero_gradient_no_decay_is_identity() {
        let mut s = store(1.0);
        let before = s.clone();
        let cfg = AdamConfig { weight_decay: 0.0, ..Default::default() };
        let mut o = OptimState::new(cfg, &s);
        o.step(&mut s, &[DenseArray::zeros(1, 3)]);
        assert_eq!(s, before);
    }

    #[test]
    fn first_step_is_signed_lr() {
        let mut s = store(0.5);
        let cfg = AdamConfig { weight_decay: 0.0, lr: 0.01, ..Default::default() };
        let mut o = OptimState::new(cfg, &s);
        let g = DenseArray::new(1, 3, vec![3.0, -0.2, 1e-3]);
        o.step(&mut s, std::slice::from_ref(&g));
        let w = s.get("w").unwrap();
        let p0 = [0.5, -0.5, 1.0];
        for i in 0..3 {
            let delta = w.get(0, i) - p0[i];
            // m̂ = g and v̂ = g², so the step is lr·g/(|g| + ε).
            let gi = g.get(0, i);
            let expect = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((delta - expect).abs() < 1e-15, "{delta} vs {expect}");
        }
    }

    #[test]
    fn decay_shrinks_unit_parameter() {
        let mut s = ParamStore::new();
        s.insert("w", DenseArray::scalar(1.0));
        let cfg = AdamConfig { weight_decay: 1e-5, lr: 1e-3, ..Default::default() };
        let mut o = OptimState::new(cfg, &s);
        o.step(&mut s, &[DenseArray::scalar(0.0)]);
        // g = 1e-5, m̂ = g, v̂ = g², update = lr·g/(g + ε).
        let expect = 1.0 - 1e-3 * 1e-5 / (1e-5 + 1e-8);
        let p = s.get("w").unwrap().get(0, 0);
        assert!(p < 1.0);
        assert!((p - expect).abs() < 1e-15);
    }
}
