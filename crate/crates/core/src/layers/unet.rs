use rand_chacha::ChaCha8Rng;

use super::{check_width, Conv2d, Module, Param};
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Shape-preserving U-Net on `[B, C, H, W]`.
///
/// Encoder: a 3×3 conv at full resolution, then `depth` stride-2 3×3 convs.
/// Decoder: per level, nearest-neighbour upsampling, concatenation with the
/// matching encoder output and a 1×1 fuse back to `C` channels. ReLU follows
/// every conv except the final fuse. Depth 0 is a 3×3 conv + ReLU followed by
/// a 1×1 conv.
#[derive(Clone, Debug)]
pub struct UNet<F: Real> {
    depth: usize,
    channels: usize,
    stem: Conv2d<F>,
    down: Vec<Conv2d<F>>,
    fuse: Vec<Conv2d<F>>,
}

impl<F: Real> UNet<F> {
    pub fn new(name: &str, channels: usize, depth: usize, rng: &mut ChaCha8Rng) -> Self {
        let stem = Conv2d::new(&format!("{name}.stem"), channels, channels, 3, 1, rng);
        let down = (0..depth)
            .map(|i| Conv2d::new(&format!("{name}.down{i}"), channels, channels, 3, 2, rng))
            .collect();
        let fuse = if depth == 0 {
            vec![Conv2d::pointwise(&format!("{name}.out"), channels, channels, rng)]
        } else {
            (0..depth)
                .map(|i| Conv2d::pointwise(&format!("{name}.fuse{i}"), 2 * channels, channels, rng))
                .collect()
        };
        UNet {
            depth,
            channels,
            stem,
            down,
            fuse,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub(crate) fn analytic_count(channels: usize, depth: usize) -> usize {
        let c3 = Conv2d::<F>::analytic_count(channels, channels, 3);
        if depth == 0 {
            c3 + Conv2d::<F>::analytic_count(channels, channels, 1)
        } else {
            c3 * (depth + 1) + depth * Conv2d::<F>::analytic_count(2 * channels, channels, 1)
        }
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        check_width("unet", x, self.channels)?;
        let factor = 1usize << self.depth;
        let (h, w) = (x.shape()[2], x.shape()[3]);
        if h % factor != 0 || w % factor != 0 {
            return Err(Error::invalid_shape(
                "unet",
                format!(
                    "spatial dims {h}x{w} must be divisible by 2^{} = {factor}",
                    self.depth
                ),
            ));
        }
        let stem = self.stem.forward(x)?.relu();
        if self.depth == 0 {
            return self.fuse[0].forward(&stem);
        }
        let mut skips = vec![stem];
        for conv in &self.down {
            let next = conv.forward(skips.last().unwrap())?.relu();
            skips.push(next);
        }
        let mut h = skips.pop().unwrap();
        // fuse[i] merges into encoder level i
        for level in (0..self.depth).rev() {
            let up = h.upsample2x()?;
            let merged = Tensor::cat(&[&up, &skips[level]], 1)?;
            h = self.fuse[level].forward(&merged)?;
            if level > 0 {
                h = h.relu();
            }
        }
        Ok(h)
    }
}

impl<F: Real> Module<F> for UNet<F> {
    fn params(&self) -> Vec<&Param<F>> {
        std::iter::once(&self.stem)
            .chain(&self.down)
            .chain(&self.fuse)
            .flat_map(|c| c.params())
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<F>> {
        std::iter::once(&mut self.stem)
            .chain(&mut self.down)
            .chain(&mut self.fuse)
            .flat_map(|c| c.params_mut())
            .collect()
    }
}
