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

/// A named gradient block, laid out like the parameter block it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct GradBlock {
    pub name: String,
    pub values: Vec<f64>,
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed moments for parameter blocks of the given lengths.
    pub fn new(config: AdamConfig, block_lens: &[usize]) -> AdamState {
        AdamState {
            config,
            step: 0,
            m: block_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Applies one update. Every gradient is checked for finiteness before
    /// anything is modified.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[GradBlock]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "{} parameter blocks, {} gradient blocks, {} moment blocks",
                params.len(),
                grads.len(),
                self.m.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.len() != g.values.len() || p.len() != m.len() {
                return Err(Error::Shape(format!("block `{}` length mismatch", g.name)));
            }
            if g.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient(g.name.clone()));
            }
        }

        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                let gi = g.values[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grad(name: &str, values: &[f64]) -> GradBlock {
        GradBlock {
            name: name.into(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut state = AdamState::new(AdamConfig::default(), &[3]);
        let mut p = vec![1.0, -2.0, 0.5];
        let before = p.clone();
        state.step(&mut [&mut p], &[grad("w", &[0.0; 3])]).unwrap();
        assert_eq!(p, before);
        assert_eq!(state.m[0], [0.0; 3]);
        assert_eq!(state.v[0], [0.0; 3]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // t = 1, g = 1: m_hat = v_hat = 1, update = lr / (1 + eps).
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(cfg, &[1]);
        let mut p = vec![0.0];
        state.step(&mut [&mut p], &[grad("w", &[1.0])]).unwrap();
        let expected = -cfg.lr / (1.0 + cfg.eps);
        assert!((p[0] - expected).abs() < 1e-18);
        assert!(p[0].abs() <= cfg.lr);
    }

    #[test]
    fn step_is_deterministic() {
        let mut a = AdamState::new(AdamConfig::default(), &[2, 1]);
        let mut pa = (vec![0.1, 0.2], vec![0.3]);
        let grads = [grad("a", &[0.5, -0.25]), grad("b", &[3.0])];
        a.step(&mut [&mut pa.0, &mut pa.1], &grads).unwrap();
        let mut b = a.clone();
        let mut pb = pa.clone();
        a.step(&mut [&mut pa.0, &mut pa.1], &grads).unwrap();
        b.step(&mut [&mut pb.0, &mut pb.1], &grads).unwrap();
        assert_eq!(a, b);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&pa.0), bits(&pb.0));
        assert_eq!(bits(&pa.1), bits(&pb.1));
    }

    #[test]
    fn non_finite_gradient_names_the_block_and_changes_nothing() {
        let mut state = AdamState::new(AdamConfig::default(), &[1, 1]);
        let mut p = (vec![1.0], vec![2.0]);
        let err = state
            .step(
                &mut [&mut p.0, &mut p.1],
                &[
                    grad("enc.0.weight", &[1.0]),
                    grad("dec.1.bias", &[f64::NAN]),
                ],
            )
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient(ref n) if n == "dec.1.bias"));
        assert_eq!(state.step, 0);
        assert_eq!(p, (vec![1.0], vec![2.0]));
    }
}
