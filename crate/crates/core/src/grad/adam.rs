use super::{Gradients, ParamSet, Tensor};
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
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        let zeros = || params.iter().map(|(_, _, t)| Tensor::zeros(t.shape())).collect();
        AdamState {
            config,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update.
    pub fn step(&mut self, params: &mut ParamSet, grads: &Gradients) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::Invalid("optimizer state does not match parameters".into()));
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for id in params.ids() {
            let g = grads.get(id).data();
            let m = self.m[id.index()].data_mut();
            let v = self.v[id.index()].data_mut();
            let theta = params.get_mut(id).data_mut();
            for i in 0..theta.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                theta[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(x: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.add("theta", Tensor::scalar(x));
        p
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut p = scalar_params(0.7);
        let mut s = AdamState::new(&p, AdamConfig::default());
        let g = Gradients::zeros_like(&p);
        s.step(&mut p, &g).unwrap();
        assert_eq!(p.get(p.find("theta").unwrap()).data()[0], 0.7);
    }

    #[test]
    fn first_step_is_learning_rate() {
        let mut p = scalar_params(0.0);
        let mut s = AdamState::new(&p, AdamConfig::default());
        let mut g = Gradients::zeros_like(&p);
        let id = p.find("theta").unwrap();
        g.get_mut(id).data_mut()[0] = 1.0;
        s.step(&mut p, &g).unwrap();
        // m_hat = v_hat = 1 after bias correction
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p.get(id).data()[0] - expected).abs() < 1e-15);
        assert_eq!(s.step_count(), 1);
        s.step(&mut p, &g).unwrap();
        assert_eq!(s.step_count(), 2);
    }

    #[test]
    fn second_moment_nonnegative() {
        let mut p = scalar_params(1.0);
        let mut s = AdamState::new(&p, AdamConfig::default());
        let mut g = Gradients::zeros_like(&p);
        let id = p.find("theta").unwrap();
        for k in 0..10 {
            g.get_mut(id).data_mut()[0] = if k % 2 == 0 { -3.0 } else { 2.0 };
            s.step(&mut p, &g).unwrap();
        }
        assert!(s.v.iter().all(|t| t.data().iter().all(|&x| x >= 0.0)));
    }
}
