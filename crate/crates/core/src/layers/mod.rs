//! Building blocks: learnable parameters, affine maps, fully connected nets,
//! spectral convolutions, the U-Net operator and the two Fourier layer types.

mod fnn;
mod fourier;
mod spectral;
mod unet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use fnn::{Fnn, Linear};
pub use fourier::{FFourierLayer, UFourierLayer};
pub use spectral::{FactorizedSpectralConv, SpectralConv2d};
pub use unet::UNet;

use crate::error::{Error, Result};
use crate::tensor::{Padding, Real, Tensor};

/// A named learnable tensor. The value is a gradient-accumulating leaf.
#[derive(Clone, Debug)]
pub struct Param<F: Real> {
    name: String,
    value: Tensor<F>,
}

impl<F: Real> Param<F> {
    pub fn new(name: impl Into<String>, value: Tensor<F>) -> Self {
        Param {
            name: name.into(),
            value: value.requires_grad(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tensor(&self) -> &Tensor<F> {
        &self.value
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }

    pub fn numel(&self) -> usize {
        self.value.numel()
    }

    pub fn grad(&self) -> Option<Vec<F>> {
        self.value.grad()
    }

    pub fn zero_grad(&self) {
        self.value.zero_grad();
    }

    /// Replaces the values, starting a fresh leaf with no gradient.
    pub fn set(&mut self, data: Vec<F>) -> Result<()> {
        if data.len() != self.numel() {
            return Err(Error::shape("param set", self.shape(), &[data.len()]));
        }
        self.value = Tensor::from_vec(self.value.shape(), data)?.requires_grad();
        Ok(())
    }
}

/// Anything holding learnable parameters.
pub trait Module<F: Real> {
    fn params(&self) -> Vec<&Param<F>>;

    fn params_mut(&mut self) -> Vec<&mut Param<F>>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.numel()).sum()
    }

    fn zero_grad(&self) {
        self.params().iter().for_each(|p| p.zero_grad());
    }
}

pub(crate) fn uniform<F: Real>(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<F> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| F::of(rng.random_range(lo..hi)))
        .collect();
    Tensor::raw(shape, data)
}

/// 2-D convolution layer (weights `[Cout, Cin, k, k]`, bias `[Cout]`).
#[derive(Clone, Debug)]
pub struct Conv2d<F: Real> {
    pub weight: Param<F>,
    pub bias: Param<F>,
    padding: Padding,
    stride: usize,
}

impl<F: Real> Conv2d<F> {
    pub fn new(
        name: &str,
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let bound = 1.0 / ((cin * kernel * kernel) as f64).sqrt();
        Conv2d {
            weight: Param::new(
                format!("{name}.weight"),
                uniform(rng, &[cout, cin, kernel, kernel], -bound, bound),
            ),
            bias: Param::new(format!("{name}.bias"), uniform(rng, &[cout], -bound, bound)),
            padding: Padding::Same,
            stride,
        }
    }

    pub fn pointwise(name: &str, cin: usize, cout: usize, rng: &mut ChaCha8Rng) -> Self {
        Self::new(name, cin, cout, 1, 1, rng)
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        x.conv2d(
            self.weight.tensor(),
            self.bias.tensor(),
            self.padding,
            self.stride,
        )
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub(crate) fn analytic_count(cin: usize, cout: usize, kernel: usize) -> usize {
        cout * cin * kernel * kernel + cout
    }
}

impl<F: Real> Module<F> for Conv2d<F> {
    fn params(&self) -> Vec<&Param<F>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

pub(crate) fn check_width<F: Real>(op: &'static str, x: &Tensor<F>, width: usize) -> Result<()> {
    if x.ndim() != 4 || x.shape()[1] != width {
        return Err(Error::invalid_shape(
            op,
            format!("expected [B, {width}, H, W], got {:?}", x.shape()),
        ));
    }
    Ok(())
}
