//! The FFINO operator: a MIONet encoder (spatial branch, scalar branch and
//! trunk, merged as `(b1 + b2) * t`) feeding a decoder of Fourier layers and
//! two pointwise projections.

mod checkpoint;
pub mod inputs;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};

use crate::datagen::Target;
use crate::error::{Error, Result};
use crate::layers::{Conv2d, FFourierLayer, Fnn, Module, Param, UFourierLayer};
use crate::rng::{self, tags};
use crate::tensor::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    FFourier,
    UFourier,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderPreset {
    /// `n_f_fourier` F-Fourier layers followed by `m_u_fourier` U-Fourier layers.
    Ffino,
    /// `n_f_fourier + m_u_fourier` U-Fourier layers.
    FmionetLike,
    Custom(Vec<LayerKind>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub width: usize,
    pub modes_r: usize,
    pub modes_z: usize,
    pub n_f_fourier: usize,
    pub m_u_fourier: usize,
    pub decoder_preset: DecoderPreset,
    pub projection_width: usize,
    pub spatial_in_channels: usize,
    pub scalar_in_dim: usize,
    pub trunk_in_dim: usize,
    pub branch_hidden: Vec<usize>,
    pub trunk_hidden: Vec<usize>,
    pub unet_depth: usize,
    pub grid_nr: usize,
    pub grid_nz: usize,
    pub target: Target,
    /// Model outputs are in units of `output_scale`.
    pub output_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            width: 36,
            modes_r: 32,
            modes_z: 17,
            n_f_fourier: 3,
            m_u_fourier: 3,
            decoder_preset: DecoderPreset::Ffino,
            projection_width: 128,
            spatial_in_channels: 5,
            scalar_in_dim: 7,
            trunk_in_dim: 1,
            branch_hidden: vec![64, 64],
            trunk_hidden: vec![64, 64],
            unet_depth: 2,
            grid_nr: 192,
            grid_nz: 64,
            target: Target::Sg,
            output_scale: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn fmionet_like(&self) -> Self {
        ModelConfig {
            decoder_preset: DecoderPreset::FmionetLike,
            ..self.clone()
        }
    }

    pub fn decoder_layers(&self) -> Vec<LayerKind> {
        match &self.decoder_preset {
            DecoderPreset::Ffino => std::iter::repeat_n(LayerKind::FFourier, self.n_f_fourier)
                .chain(std::iter::repeat_n(LayerKind::UFourier, self.m_u_fourier))
                .collect(),
            DecoderPreset::FmionetLike => {
                vec![LayerKind::UFourier; self.n_f_fourier + self.m_u_fourier]
            }
            DecoderPreset::Custom(list) => list.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width", self.width),
            ("projection_width", self.projection_width),
            ("spatial_in_channels", self.spatial_in_channels),
            ("scalar_in_dim", self.scalar_in_dim),
            ("trunk_in_dim", self.trunk_in_dim),
            ("grid_nr", self.grid_nr),
            ("grid_nz", self.grid_nz),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.decoder_layers().is_empty() {
            return Err(Error::Config("decoder layer list is empty".into()));
        }
        if self.branch_hidden.contains(&0) || self.trunk_hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        if !(self.output_scale.is_finite() && self.output_scale > 0.0) {
            return Err(Error::Config(format!("output_scale {} must be positive", self.output_scale)));
        }
        let f = 1usize << self.unet_depth;
        if self.decoder_layers().contains(&LayerKind::UFourier)
            && (self.grid_nr % f != 0 || self.grid_nz % f != 0)
        {
            return Err(Error::Config(format!(
                "grid {}x{} not divisible by 2^{} required by the U-Net",
                self.grid_nr, self.grid_nz, self.unet_depth
            )));
        }
        Ok(())
    }

    fn widths(&self, d_in: usize, hidden: &[usize]) -> Vec<usize> {
        std::iter::once(d_in)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(self.width))
            .collect()
    }

    /// Closed-form number of trainable scalars.
    pub fn param_count(&self) -> usize {
        let w = self.width;
        let modes = (self.modes_r, self.modes_z);
        let encoder = Conv2d::<f32>::analytic_count(self.spatial_in_channels, w, 1)
            + Fnn::<f32>::analytic_count(&self.widths(self.scalar_in_dim, &self.branch_hidden))
            + Fnn::<f32>::analytic_count(&self.widths(self.trunk_in_dim, &self.trunk_hidden));
        let decoder: usize = self
            .decoder_layers()
            .iter()
            .map(|k| match k {
                LayerKind::FFourier => FFourierLayer::<f32>::analytic_count(w, modes),
                LayerKind::UFourier => UFourierLayer::<f32>::analytic_count(w, modes, self.unet_depth),
            })
            .sum();
        encoder
            + decoder
            + Conv2d::<f32>::analytic_count(w, w, 1)
            + Conv2d::<f32>::analytic_count(w, self.projection_width, 1)
            + Conv2d::<f32>::analytic_count(self.projection_width, 1, 1)
    }
}

#[derive(Clone, Debug)]
pub enum DecoderLayer<F: Real> {
    F(FFourierLayer<F>),
    U(UFourierLayer<F>),
}

impl<F: Real> DecoderLayer<F> {
    pub fn forward(&self, z: &Tensor<F>) -> Result<Tensor<F>> {
        match self {
            DecoderLayer::F(l) => l.forward(z),
            DecoderLayer::U(l) => l.forward(z),
        }
    }

    fn module(&self) -> &dyn Module<F> {
        match self {
            DecoderLayer::F(l) => l,
            DecoderLayer::U(l) => l,
        }
    }

    fn module_mut(&mut self) -> &mut dyn Module<F> {
        match self {
            DecoderLayer::F(l) => l,
            DecoderLayer::U(l) => l,
        }
    }
}

/// Intermediate tensors of one forward pass, for shape audits.
#[derive(Debug)]
pub struct Trace<F: Real> {
    pub branch1: Tensor<F>,
    pub branch2: Tensor<F>,
    pub trunk: Tensor<F>,
    pub merged: Tensor<F>,
    pub layers: Vec<Tensor<F>>,
    pub proj2: Tensor<F>,
    pub proj3: Tensor<F>,
    pub output: Tensor<F>,
}

#[derive(Clone, Debug)]
pub struct FfinoModel<F: Real> {
    config: ModelConfig,
    pub branch1: Conv2d<F>,
    pub branch2: Fnn<F>,
    pub trunk: Fnn<F>,
    pub proj1: Conv2d<F>,
    pub decoder: Vec<DecoderLayer<F>>,
    pub proj2: Conv2d<F>,
    pub proj3: Conv2d<F>,
}

impl<F: Real> FfinoModel<F> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut r: ChaCha8Rng = rng::stream(seed, &[tags::INIT]);
        let w = config.width;
        let grid = (config.grid_nr, config.grid_nz);
        let modes = (config.modes_r, config.modes_z);
        let branch1 = Conv2d::pointwise("branch1", config.spatial_in_channels, w, &mut r);
        let branch2 = Fnn::new("branch2", &config.widths(config.scalar_in_dim, &config.branch_hidden), &mut r)?;
        let trunk = Fnn::new("trunk", &config.widths(config.trunk_in_dim, &config.trunk_hidden), &mut r)?;
        let proj1 = Conv2d::pointwise("proj1", w, w, &mut r);
        let decoder = config
            .decoder_layers()
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let name = format!("decoder.{i}");
                Ok(match k {
                    LayerKind::FFourier => DecoderLayer::F(FFourierLayer::new(&name, w, modes, grid, &mut r)?),
                    LayerKind::UFourier => DecoderLayer::U(UFourierLayer::new(
                        &name,
                        w,
                        modes,
                        grid,
                        config.unet_depth,
                        &mut r,
                    )?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let proj2 = Conv2d::pointwise("proj2", w, config.projection_width, &mut r);
        let proj3 = Conv2d::pointwise("proj3", config.projection_width, 1, &mut r);
        Ok(FfinoModel {
            config,
            branch1,
            branch2,
            trunk,
            proj1,
            decoder,
            proj2,
            proj3,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn check_inputs(&self, spatial: &Tensor<F>, scalars: &Tensor<F>, times: &Tensor<F>) -> Result<()> {
        let c = &self.config;
        let s = spatial.shape();
        if s.len() != 4 || s[1] != c.spatial_in_channels {
            return Err(Error::invalid_shape(
                "encode",
                format!("spatial input {s:?}, expected [B_S, {}, N_r, N_z]", c.spatial_in_channels),
            ));
        }
        if scalars.shape() != [s[0], c.scalar_in_dim] {
            return Err(Error::invalid_shape(
                "encode",
                format!("scalar input {:?}, expected [{}, {}]", scalars.shape(), s[0], c.scalar_in_dim),
            ));
        }
        if times.ndim() != 2 || times.shape()[1] != c.trunk_in_dim {
            return Err(Error::invalid_shape(
                "encode",
                format!("time input {:?}, expected [B_T, {}]", times.shape(), c.trunk_in_dim),
            ));
        }
        Ok(())
    }

    /// `[B_S, C, N_r, N_z]`, `[B_S, D]`, `[B_T, 1]` -> `[B_S * B_T, width, N_r, N_z]`.
    pub fn encode(&self, spatial: &Tensor<F>, scalars: &Tensor<F>, times: &Tensor<F>) -> Result<Tensor<F>> {
        Ok(self.encode_parts(spatial, scalars, times)?.3)
    }

    fn encode_parts(
        &self,
        spatial: &Tensor<F>,
        scalars: &Tensor<F>,
        times: &Tensor<F>,
    ) -> Result<(Tensor<F>, Tensor<F>, Tensor<F>, Tensor<F>)> {
        self.check_inputs(spatial, scalars, times)?;
        let w = self.config.width;
        let [bs, _, nr, nz] = spatial.shape().try_into().unwrap();
        let bt = times.shape()[0];
        let b1 = self.branch1.forward(spatial)?;
        let b2 = self.branch2.forward(scalars)?;
        let t = self.trunk.forward(times)?;
        let sum = b1.add(&b2.reshape(&[bs, w, 1, 1])?)?;
        let merged = sum
            .reshape(&[bs, 1, w, nr, nz])?
            .expand(&[bs, bt, w, nr, nz])?
            .mul(&t.reshape(&[bt, w, 1, 1])?)?
            .reshape(&[bs * bt, w, nr, nz])?;
        Ok((b1, b2, t, merged))
    }

    /// `[B, width, N_r, N_z]` -> `[B, 1, N_r, N_z]`.
    pub fn decode(&self, z: &Tensor<F>) -> Result<Tensor<F>> {
        let mut layers = Vec::new();
        let (_, out) = self.decode_traced(z, &mut layers)?;
        Ok(out)
    }

    fn decode_traced(&self, z: &Tensor<F>, layers: &mut Vec<Tensor<F>>) -> Result<(Tensor<F>, Tensor<F>)> {
        crate::layers::check_width("decode", z, self.config.width)?;
        let mut h = self.proj1.forward(z)?;
        layers.push(h.clone());
        for layer in &self.decoder {
            h = layer.forward(&h)?;
            layers.push(h.clone());
        }
        let p2 = self.proj2.forward(&h)?.relu();
        let out = self.proj3.forward(&p2)?;
        Ok((p2, out))
    }

    /// Predictions `[B_S, B_T, N_r, N_z]` in model units (see `output_scale`).
    pub fn forward(&self, spatial: &Tensor<F>, scalars: &Tensor<F>, times: &Tensor<F>) -> Result<Tensor<F>> {
        Ok(self.trace(spatial, scalars, times)?.output)
    }

    pub fn trace(&self, spatial: &Tensor<F>, scalars: &Tensor<F>, times: &Tensor<F>) -> Result<Trace<F>> {
        let (branch1, branch2, trunk, merged) = self.encode_parts(spatial, scalars, times)?;
        let mut layers = Vec::new();
        let (proj2, proj3) = self.decode_traced(&merged, &mut layers)?;
        let s = spatial.shape();
        let output = proj3.reshape(&[s[0], times.shape()[0], s[2], s[3]])?;
        Ok(Trace {
            branch1,
            branch2,
            trunk,
            merged,
            layers,
            proj2,
            proj3,
            output,
        })
    }
}

impl<F: Real> Module<F> for FfinoModel<F> {
    fn params(&self) -> Vec<&Param<F>> {
        let mut p = self.branch1.params();
        p.extend(self.branch2.params());
        p.extend(self.trunk.params());
        p.extend(self.proj1.params());
        for l in &self.decoder {
            p.extend(l.module().params());
        }
        p.extend(self.proj2.params());
        p.extend(self.proj3.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        let mut p = self.branch1.params_mut();
        p.extend(self.branch2.params_mut());
        p.extend(self.trunk.params_mut());
        p.extend(self.proj1.params_mut());
        for l in &mut self.decoder {
            p.extend(l.module_mut().params_mut());
        }
        p.extend(self.proj2.params_mut());
        p.extend(self.proj3.params_mut());
        p
    }
}
