//! Input encoding: spatial channels, scalar features and time coordinates,
//! all scaled to roughly `[0, 1]` with the fixed sampling ranges.

use crate::datagen::{Grid, Sample, Target, KH_RANGE, PHI_RANGE, SCALAR_RANGES};
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

pub const SPATIAL_CHANNELS: usize = 5;
pub const SCALAR_DIM: usize = 7;

/// Final report day; times enter the trunk as `day / T_END`.
pub const T_END: f64 = 180.0;

fn minmax(v: f64, r: (f64, f64)) -> f64 {
    (v - r.0) / (r.1 - r.0)
}

/// `[5, N_r, N_z]`: normalized log permeability, anisotropy, porosity,
/// log radius and depth.
pub fn spatial_features<F: Real>(s: &Sample, grid: &Grid) -> Result<Vec<F>> {
    let plane = grid.plane();
    if s.fields.kh.len() != plane {
        return Err(Error::invalid_shape(
            "spatial_features",
            format!("sample {} has {} cells, grid {}x{}", s.index, s.fields.kh.len(), grid.nr, grid.nz),
        ));
    }
    let lr = (KH_RANGE.0.log10(), KH_RANGE.1.log10());
    let r0 = grid.r_centers[0].ln();
    let r1 = grid.r_centers[grid.nr - 1].ln();
    let zmax = super::super::datagen::THICKNESS;
    let mut out = Vec::with_capacity(SPATIAL_CHANNELS * plane);
    out.extend(s.fields.kh.iter().map(|&k| F::of(minmax((k as f64).log10(), lr))));
    out.extend(s.fields.aniso.iter().map(|&a| F::of(a as f64)));
    out.extend(s.fields.phi.iter().map(|&p| F::of(minmax(p as f64, PHI_RANGE))));
    for r in &grid.r_centers {
        let v = F::of(minmax(r.ln(), (r0, r1)));
        out.extend(std::iter::repeat_n(v, grid.nz));
    }
    for _ in 0..grid.nr {
        out.extend(grid.z_centers.iter().map(|&z| F::of(z / zmax)));
    }
    Ok(out)
}

/// `Q` and the curve coefficients, min-max scaled.
pub fn scalar_features<F: Real>(s: &Sample) -> Vec<F> {
    s.scalars()
        .iter()
        .zip(SCALAR_RANGES)
        .map(|(&v, r)| F::of(minmax(v, r)))
        .collect()
}

/// One model input batch with its reference.
#[derive(Debug)]
pub struct Batch<F: Real> {
    pub spatial: Tensor<F>,
    pub scalars: Tensor<F>,
    pub times: Tensor<F>,
    /// `[B_S, B_T, N_r, N_z]` in model units.
    pub target: Tensor<F>,
}

/// Precomputed per-sample features, reused across epochs.
pub struct Encoded<F: Real> {
    pub spatial: Vec<Vec<F>>,
    pub scalars: Vec<Vec<F>>,
}

impl<F: Real> Encoded<F> {
    pub fn new(samples: &[Sample], grid: &Grid) -> Result<Self> {
        Ok(Encoded {
            spatial: samples.iter().map(|s| spatial_features(s, grid)).collect::<Result<_>>()?,
            scalars: samples.iter().map(scalar_features).collect(),
        })
    }
}

/// Assembles a batch from samples `ids` at report steps `steps`; targets are
/// divided by `scale`.
pub fn make_batch<F: Real>(
    samples: &[Sample],
    enc: &Encoded<F>,
    grid: &Grid,
    ids: &[usize],
    steps: &[usize],
    target: Target,
    scale: f64,
) -> Result<Batch<F>> {
    let (nr, nz) = (grid.nr, grid.nz);
    let plane = grid.plane();
    let mut spatial = Vec::with_capacity(ids.len() * SPATIAL_CHANNELS * plane);
    let mut scalars = Vec::with_capacity(ids.len() * SCALAR_DIM);
    let mut y = Vec::with_capacity(ids.len() * steps.len() * plane);
    let inv = 1.0 / scale;
    for &i in ids {
        spatial.extend_from_slice(&enc.spatial[i]);
        scalars.extend_from_slice(&enc.scalars[i]);
        let t = samples[i].target(target);
        for &k in steps {
            y.extend(t[k * plane..(k + 1) * plane].iter().map(|&v| F::of(v as f64 * inv)));
        }
    }
    let times: Vec<F> = steps.iter().map(|&k| F::of(grid.report_days[k] / T_END)).collect();
    let (bs, bt) = (ids.len(), steps.len());
    Ok(Batch {
        spatial: Tensor::from_vec(&[bs, SPATIAL_CHANNELS, nr, nz], spatial)?,
        scalars: Tensor::from_vec(&[bs, SCALAR_DIM], scalars)?,
        times: Tensor::from_vec(&[bt, 1], times)?,
        target: Tensor::from_vec(&[bs, bt, nr, nz], y)?,
    })
}
