use serde::{Deserialize, Serialize};

use super::{GradStore, ParamStore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Learning rate is multiplied by `decay` every `decay_steps` steps.
    pub decay: f64,
    pub decay_steps: u64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-3,
            beta1: 0.9,
            beta2: 0.9,
            eps: 1e-12,
            decay: 0.75,
            decay_steps: 5000,
            clip: Some(5.0),
        }
    }
}

impl AdamConfig {
    /// Learning rate in effect at 1-based step `t`.
    pub fn lr_at(&self, t: u64) -> f64 {
        if self.decay_steps == 0 {
            return self.lr;
        }
        self.lr * self.decay.powf(((t - 1) / self.decay_steps) as f64)
    }
}

#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(store: &ParamStore<T>, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<T>> = store.ids().map(|id| vec![T::zero(); store.get(id).len()]).collect();
        AdamState {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One update. Parameters without a gradient are treated as having a zero
    /// gradient; frozen parameters are skipped.
    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &GradStore<T>) -> Result<()> {
        for id in store.ids() {
            if let Some(g) = grads.get(id) {
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite(format!("gradient of {}", store.name(id))));
                }
            }
        }
        let c = self.config;
        let clip_scale = match c.clip {
            Some(max) => {
                let norm = grads.norm().as_f64();
                if norm > max {
                    T::lit(max / (norm + 1e-6))
                } else {
                    T::one()
                }
            }
            None => T::one(),
        };
        self.step += 1;
        let t = self.step as i32;
        let lr = T::lit(c.lr_at(self.step));
        let (b1, b2, eps) = (T::lit(c.beta1), T::lit(c.beta2), T::lit(c.eps));
        let bc1 = T::one() - b1.powi(t);
        let bc2 = T::one() - b2.powi(t);
        for id in store.ids().collect::<Vec<_>>() {
            if !store.is_trainable(id) {
                continue;
            }
            let i = id.index();
            let g = grads.get(id);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            let p = store.get_mut(id).data_mut();
            for j in 0..p.len() {
                let gj = g.map_or(T::zero(), |g| g[j] * clip_scale);
                m[j] = b1 * m[j] + (T::one() - b1) * gj;
                v[j] = b2 * v[j] + (T::one() - b2) * gj * gj;
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                p[j] = p[j] - lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn one_param(v: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add("w", Tensor::scalar(v), true);
        s
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = one_param(1.5);
        let mut st = AdamState::new(&s, AdamConfig::default());
        let mut g = GradStore::new(&s);
        g.add(s.id("w").unwrap(), &[0.0]);
        st.step(&mut s, &g).unwrap();
        assert_eq!(s.get(s.id("w").unwrap()).data()[0], 1.5);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn constant_gradient_moves_by_lr() {
        let mut s = one_param(0.0);
        let cfg = AdamConfig {
            decay_steps: 0,
            clip: None,
            ..AdamConfig::default()
        };
        let mut st = AdamState::new(&s, cfg);
        let id = s.id("w").unwrap();
        let mut g = GradStore::new(&s);
        g.add(id, &[0.37]);
        let mut prev = 0.0;
        for _ in 0..10_000 {
            st.step(&mut s, &g).unwrap();
            let now = s.get(id).data()[0];
            let delta = (now - prev).abs();
            assert!((delta - cfg.lr).abs() <= 0.01 * cfg.lr, "{delta}");
            prev = now;
        }
    }

    #[test]
    fn zero_betas_give_sign_update() {
        let mut s = one_param(0.0);
        let cfg = AdamConfig {
            beta1: 0.0,
            beta2: 0.0,
            eps: 1e-8,
            clip: None,
            ..AdamConfig::default()
        };
        let mut st = AdamState::new(&s, cfg);
        let id = s.id("w").unwrap();
        let mut g = GradStore::new(&s);
        g.add(id, &[-3.0]);
        st.step(&mut s, &g).unwrap();
        let expected = cfg.lr * 3.0 / (3.0 + 1e-8);
        assert!((s.get(id).data()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut s = one_param(0.0);
        let mut st = AdamState::new(&s, AdamConfig::default());
        let mut g = GradStore::new(&s);
        g.add(s.id("w").unwrap(), &[f64::NAN]);
        let err = st.step(&mut s, &g).unwrap_err();
        assert!(err.is_numeric());
        assert!(err.to_string().contains('w'));
    }

    #[test]
    fn schedule_decays_every_interval() {
        let c = AdamConfig::default();
        assert_eq!(c.lr_at(1), 2e-3);
        assert_eq!(c.lr_at(5000), 2e-3);
        assert!((c.lr_at(5001) - 1.5e-3).abs() < 1e-15);
    }
}
