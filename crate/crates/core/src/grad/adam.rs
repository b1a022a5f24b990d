use super::params::{ParamGrads, ParamStore};
use super::real::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step<T: Real>(store: &mut ParamStore<T>, grads: &ParamGrads<T>, cfg: &AdamConfig, t: u64) -> Result<()> {
    if t == 0 {
        return Err(Error::Config("adam step counter starts at 1".into()));
    }
    if grads.len() != store.len() {
        return Err(Error::ShapeMismatch { op: "adam", detail: format!("{} grads for {} params", grads.len(), store.len()) });
    }
    for i in 0..store.len() {
        if grads.get(i).shape() != store.value(i).shape() {
            return Err(Error::ShapeMismatch {
                op: "adam",
                detail: format!("{}: {:?} vs {:?}", store.name(i), grads.get(i).shape(), store.value(i).shape()),
            });
        }
    }
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..store.len() {
        let g = grads.get(i).data();
        let (value, m, v) = store.moments_mut(i);
        for (((p, mi), vi), &gi) in value.data_mut().iter_mut().zip(m.data_mut()).zip(v.data_mut()).zip(g) {
            let gi = gi.f64();
            let m_new = cfg.beta1 * mi.f64() + (1.0 - cfg.beta1) * gi;
            let v_new = cfg.beta2 * vi.f64() + (1.0 - cfg.beta2) * gi * gi;
            *mi = T::of(m_new);
            *vi = T::of(v_new);
            let step = cfg.lr * (m_new / c1) / ((v_new / c2).sqrt() + cfg.eps);
            *p = T::of(p.f64() - step);
        }
    }
    Ok(())
}

/// Adam with an internal step counter.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step<T: Real>(&mut self, store: &mut ParamStore<T>, grads: &ParamGrads<T>) -> Result<()> {
        self.t += 1;
        adam_step(store, grads, &self.config, self.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::{Graph, Tensor};

    fn scalar_store(x: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add("theta", Tensor::scalar(x)).unwrap();
        s
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = scalar_store(0.7);
        let g = ParamGrads::new(vec![Tensor::scalar(0.0)]);
        adam_step(&mut s, &g, &AdamConfig::default(), 1).unwrap();
        assert_eq!(s.value(0).item(), 0.7);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        let cfg = AdamConfig { lr: 0.01, ..Default::default() };
        for g0 in [3.0, -0.2, 1e-3] {
            let mut s = scalar_store(1.0);
            adam_step(&mut s, &ParamGrads::new(vec![Tensor::scalar(g0)]), &cfg, 1).unwrap();
            let expected = 1.0 - 0.01 * g0 / (g0.abs() + 1e-8);
            assert!((s.value(0).item() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let mut s = scalar_store(1.0);
        let mut opt = Adam::new(AdamConfig { lr: 0.1, ..Default::default() });
        for _ in 0..200 {
            let mut g = Graph::new();
            let th = g.param(&s, 0).unwrap();
            let sq = g.mul(th, th).unwrap();
            let grads = g.backward(sq).unwrap().params(&s);
            opt.step(&mut s, &grads).unwrap();
        }
        assert!(s.value(0).item().abs() < 0.05, "theta {}", s.value(0).item());
    }

    #[test]
    fn shape_mismatch() {
        let mut s = scalar_store(1.0);
        let g = ParamGrads::new(vec![Tensor::zeros(&[2])]);
        assert!(matches!(adam_step(&mut s, &g, &AdamConfig::default(), 1), Err(Error::ShapeMismatch { .. })));
        assert!(adam_step(&mut s, &ParamGrads::new(vec![Tensor::scalar(0.0)]), &AdamConfig::default(), 0).is_err());
    }
}
