use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

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

/// Moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        AdamState {
            config,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// One bias-corrected Adam step, in place.
    pub fn update(&mut self, param: &mut [f64], grad: &[f64]) -> Result<()> {
        if param.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::shape(
                "adam_update",
                self.m.len(),
                format!("param={} grad={}", param.len(), grad.len()),
            ));
        }
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.t += 1;
        let t = self.t as i32;
        let correct1 = 1.0 - beta1.powi(t);
        let correct2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in param
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / correct1;
            let v_hat = *v / correct2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_param() {
        let mut s = AdamState::new(AdamConfig::default(), 3);
        let mut p = vec![1.0, -2.0, 0.5];
        s.update(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamConfig::default();
        for g in [3.0, -0.02, 1e-3] {
            let mut s = AdamState::new(cfg, 1);
            let mut p = vec![0.0];
            s.update(&mut p, &[g]).unwrap();
            let expected = cfg.lr * g.abs() / (g.abs() + cfg.eps);
            assert!((p[0].abs() - expected).abs() < 1e-15);
            assert!((p[0].abs() - cfg.lr).abs() < 1e-7);
            assert_eq!(p[0].signum(), -g.signum());
        }
    }

    #[test]
    fn two_steps_unroll() {
        let cfg = AdamConfig::default();
        let g = 0.7;
        let mut s = AdamState::new(cfg, 1);
        let mut p = vec![0.0];
        s.update(&mut p, &[g]).unwrap();
        s.update(&mut p, &[g]).unwrap();
        assert_eq!(s.t, 2);
        let expected = (1.0 - cfg.beta1) * (1.0 + cfg.beta1) * g;
        assert!((s.m[0] - expected).abs() < 1e-15);
        assert!(s.v[0] >= 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(AdamConfig::default(), 2);
        assert!(s.update(&mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(s.update(&mut [0.0; 2], &[0.0; 1]).is_err());
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut s = AdamState::new(AdamConfig::default(), 2);
            let mut p = vec![0.3, -0.3];
            for i in 0..10 {
                s.update(&mut p, &[i as f64 * 0.1, -0.05]).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }
}
