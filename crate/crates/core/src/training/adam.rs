use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::Param;
use crate::tensor::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(10.0),
        }
    }
}

/// Bias-corrected adaptive-moment optimizer.
#[derive(Clone, Debug)]
pub struct Adam<F: Real> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> Adam<F> {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update from the accumulated gradients. Parameters without
    /// a gradient are treated as having a zero gradient.
    pub fn step(&mut self, params: &mut [&mut Param<F>], lr: f64) -> Result<()> {
        let grads: Vec<Vec<F>> = params
            .iter()
            .map(|p| p.grad().unwrap_or_else(|| vec![F::zero(); p.numel()]))
            .collect();
        for (p, g) in params.iter().zip(&grads) {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of {}", p.name())));
            }
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![F::zero(); p.numel()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() || self.m.iter().zip(params.iter()).any(|(m, p)| m.len() != p.numel()) {
            return Err(Error::InvalidArgument("optimizer state does not match parameters".into()));
        }
        let mut scale = 1.0;
        if let Some(clip) = self.config.clip_norm {
            let norm = grads
                .iter()
                .flatten()
                .map(|g| g.as_f64() * g.as_f64())
                .sum::<f64>()
                .sqrt();
            if norm > clip {
                scale = clip / norm;
            }
        }
        self.step += 1;
        let c = &self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        let (b1, b2) = (F::of(c.beta1), F::of(c.beta2));
        let (one, eps, s) = (F::one(), F::of(c.eps), F::of(scale));
        let step_size = F::of(lr / bc1);
        let inv_bc2 = F::of(1.0 / bc2);
        for (k, p) in params.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let mut w = p.tensor().to_vec();
            for i in 0..w.len() {
                let g = grads[k][i] * s;
                m[i] = b1 * m[i] + (one - b1) * g;
                v[i] = b2 * v[i] + (one - b2) * g * g;
                w[i] = w[i] - step_size * m[i] / ((v[i] * inv_bc2).sqrt() + eps);
            }
            p.set(w)?;
        }
        Ok(())
    }
}
