use rand_chacha::ChaCha8Rng;

use super::{check_width, Conv2d, FactorizedSpectralConv, Module, Param, SpectralConv2d, UNet};
use crate::error::Result;
use crate::tensor::{Real, Tensor};

/// Factorized Fourier layer: `z + relu(W2 relu(W1 K(z) + b1) + b2)` where
/// `K` is the factorized spectral convolution and `W1`, `W2` are 1×1 convs.
#[derive(Clone, Debug)]
pub struct FFourierLayer<F: Real> {
    pub spectral: FactorizedSpectralConv<F>,
    pub w1: Conv2d<F>,
    pub w2: Conv2d<F>,
}

impl<F: Real> FFourierLayer<F> {
    pub fn new(
        name: &str,
        width: usize,
        modes: (usize, usize),
        grid: (usize, usize),
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(FFourierLayer {
            spectral: FactorizedSpectralConv::new(
                &format!("{name}.spectral"),
                width,
                width,
                modes.0,
                modes.1,
                grid,
                rng,
            )?,
            w1: Conv2d::pointwise(&format!("{name}.w1"), width, width, rng),
            w2: Conv2d::pointwise(&format!("{name}.w2"), width, width, rng),
        })
    }

    pub fn width(&self) -> usize {
        self.w1.in_channels()
    }

    pub(crate) fn analytic_count(width: usize, modes: (usize, usize)) -> usize {
        FactorizedSpectralConv::<F>::analytic_count(width, width, modes.0, modes.1)
            + 2 * Conv2d::<F>::analytic_count(width, width, 1)
    }

    pub fn forward(&self, z: &Tensor<F>) -> Result<Tensor<F>> {
        check_width("f_fourier_layer", z, self.width())?;
        let k = self.spectral.forward(z)?;
        let h = self.w1.forward(&k)?.relu();
        let h = self.w2.forward(&h)?.relu();
        z.add(&h)
    }
}

impl<F: Real> Module<F> for FFourierLayer<F> {
    fn params(&self) -> Vec<&Param<F>> {
        let mut p = self.spectral.params();
        p.extend(self.w1.params());
        p.extend(self.w2.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut p = self.spectral.params_mut();
        p.extend(self.w1.params_mut());
        p.extend(self.w2.params_mut());
        p
    }
}

/// U-Fourier layer: `relu(K(z) + U(z) + W z + b)` with a 2-D spectral
/// convolution `K`, a U-Net `U` and a pointwise channel mix `W`.
#[derive(Clone, Debug)]
pub struct UFourierLayer<F: Real> {
    pub spectral: SpectralConv2d<F>,
    pub unet: UNet<F>,
    pub w: Conv2d<F>,
}

impl<F: Real> UFourierLayer<F> {
    pub fn new(
        name: &str,
        width: usize,
        modes: (usize, usize),
        grid: (usize, usize),
        unet_depth: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(UFourierLayer {
            spectral: SpectralConv2d::new(
                &format!("{name}.spectral"),
                width,
                width,
                modes.0,
                modes.1,
                grid,
                rng,
            )?,
            unet: UNet::new(&format!("{name}.unet"), width, unet_depth, rng),
            w: Conv2d::pointwise(&format!("{name}.w"), width, width, rng),
        })
    }

    pub fn width(&self) -> usize {
        self.w.in_channels()
    }

    pub(crate) fn analytic_count(width: usize, modes: (usize, usize), unet_depth: usize) -> usize {
        SpectralConv2d::<F>::analytic_count(width, width, modes.0, modes.1)
            + UNet::<F>::analytic_count(width, unet_depth)
            + Conv2d::<F>::analytic_count(width, width, 1)
    }

    pub fn forward(&self, z: &Tensor<F>) -> Result<Tensor<F>> {
        check_width("u_fourier_layer", z, self.width())?;
        let k = self.spectral.forward(z)?;
        let u = self.unet.forward(z)?;
        let w = self.w.forward(z)?;
        Ok(k.add(&u)?.add(&w)?.relu())
    }
}

impl<F: Real> Module<F> for UFourierLayer<F> {
    fn params(&self) -> Vec<&Param<F>> {
        let mut p = self.spectral.params();
        p.extend(self.unet.params());
        p.extend(self.w.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut p = self.spectral.params_mut();
        p.extend(self.unet.params_mut());
        p.extend(self.w.params_mut());
        p
    }
}
