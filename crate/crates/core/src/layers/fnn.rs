use rand_chacha::ChaCha8Rng;

use super::{uniform, Module, Param};
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Affine map over the trailing axis, `x @ W + b` with `W: [d_in, d_out]`.
#[derive(Clone, Debug)]
pub struct Linear<F: Real> {
    pub weight: Param<F>,
    pub bias: Param<F>,
}

impl<F: Real> Linear<F> {
    pub fn new(name: &str, d_in: usize, d_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (d_in as f64).sqrt();
        Linear {
            weight: Param::new(
                format!("{name}.weight"),
                uniform(rng, &[d_in, d_out], -bound, bound),
            ),
            bias: Param::new(format!("{name}.bias"), uniform(rng, &[d_out], -bound, bound)),
        }
    }

    pub fn d_in(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn d_out(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        x.linear(self.weight.tensor(), self.bias.tensor())
    }
}

impl<F: Real> Module<F> for Linear<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Fully connected net: affine maps with ReLU between them, none after the
/// last.
#[derive(Clone, Debug)]
pub struct Fnn<F: Real> {
    layers: Vec<Linear<F>>,
}

impl<F: Real> Fnn<F> {
    /// `widths` lists every layer width including input and output.
    pub fn new(name: &str, widths: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!("invalid FNN widths {widths:?}")));
        }
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(&format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Ok(Fnn { layers })
    }

    pub fn from_layers(layers: Vec<Linear<F>>) -> Result<Self> {
        if layers.is_empty() || layers.windows(2).any(|w| w[0].d_out() != w[1].d_in()) {
            return Err(Error::Config("FNN layer widths do not chain".into()));
        }
        Ok(Fnn { layers })
    }

    pub fn layers(&self) -> &[Linear<F>] {
        &self.layers
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].d_in()
    }

    pub fn d_out(&self) -> usize {
        self.layers.last().map(Linear::d_out).unwrap_or(0)
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        if x.shape().last() != Some(&self.d_in()) {
            return Err(Error::invalid_shape(
                "fnn",
                format!("trailing dim of {:?} != {}", x.shape(), self.d_in()),
            ));
        }
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h)?;
            if i + 1 < self.layers.len() {
                h = h.relu();
            }
        }
        Ok(h)
    }

    pub(crate) fn analytic_count(widths: &[usize]) -> usize {
        widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

impl<F: Real> Module<F> for Fnn<F> {
    fn params(&self) -> Vec<&Param<F>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}
