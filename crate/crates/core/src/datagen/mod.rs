//! Data synthesis: relative permeability curves, scalar sampling, random
//! spatial fields, the analytic toy response and the dataset file.

pub mod dataset;
pub mod fields;
pub mod lhs;
pub mod physics;
pub mod relperm;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dataset::{read_dataset, write_dataset, Dataset, DATASET_MAGIC};
pub use fields::{aniso_map, fractal_kh, porosity_from_perm, AnisoParams, FractalParams};
pub use lhs::lhs_sample;
pub use physics::{e1, toy_targets, welge_front, ToyConstants, WelgeFront};
pub use relperm::{mbc_eval, mbc_fit, RelPermCoeffs};

use crate::error::{Error, Result};
use crate::rng::{self, tags};

pub const KH_RANGE: (f64, f64) = (44.1, 1000.0);
pub const ANISO_RANGE: (f64, f64) = (0.01, 1.0);
pub const PHI_RANGE: (f64, f64) = (0.140, 0.345);

/// Sampling ranges of `Q, krw_max, krg_max, Swi, Sgr, m, n`.
pub const SCALAR_RANGES: [(f64, f64); 7] = [
    (25_500.0, 255_000.0),
    (0.530, 0.768),
    (0.031, 0.056),
    (0.340, 0.500),
    (0.030, 0.120),
    (1.453, 3.808),
    (1.052, 3.317),
];

pub const SCALAR_NAMES: [&str; 7] = ["Q", "krw_max", "krg_max", "Swi", "Sgr", "m", "n"];

pub const WELL_RADIUS: f64 = 0.0762;
pub const OUTER_RADIUS: f64 = 30_480.0;
pub const THICKNESS: f64 = 97.536;
pub const REPORT_DAYS: [f64; 12] = [
    1.0, 4.0, 9.0, 16.0, 25.0, 37.0, 52.0, 70.0, 91.0, 116.0, 145.0, 180.0,
];

/// Which field a model predicts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Sg,
    Dp,
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sg" => Ok(Target::Sg),
            "dp" => Ok(Target::Dp),
            _ => Err(Error::Config(format!("unknown target {s:?} (expected sg or dp)"))),
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Target::Sg => "sg",
            Target::Dp => "dp",
        })
    }
}

/// Radial-vertical grid: geometric radii between the well and the outer
/// boundary, uniform depths over the aquifer thickness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nr: usize,
    pub nz: usize,
    pub r_centers: Vec<f64>,
    pub z_centers: Vec<f64>,
    pub report_days: Vec<f64>,
}

impl Grid {
    pub fn new(nr: usize, nz: usize) -> Result<Self> {
        if nr < 2 || nz < 2 {
            return Err(Error::Config(format!("grid {nr}x{nz} too small")));
        }
        let ratio = (OUTER_RADIUS / WELL_RADIUS).powf(1.0 / nr as f64);
        let edges: Vec<f64> = (0..=nr).map(|i| WELL_RADIUS * ratio.powi(i as i32)).collect();
        let r_centers = edges.windows(2).map(|e| (e[0] * e[1]).sqrt()).collect();
        let dz = THICKNESS / nz as f64;
        let z_centers = (0..nz).map(|j| (j as f64 + 0.5) * dz).collect();
        Ok(Grid {
            nr,
            nz,
            r_centers,
            z_centers,
            report_days: REPORT_DAYS.to_vec(),
        })
    }

    pub fn standard() -> Self {
        Self::new(192, 64).unwrap()
    }

    pub fn plane(&self) -> usize {
        self.nr * self.nz
    }

    pub fn steps(&self) -> usize {
        self.report_days.len()
    }
}

/// Spatial inputs, row-major `[N_r, N_z]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMaps {
    pub kh: Vec<f32>,
    pub aniso: Vec<f32>,
    pub phi: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub index: usize,
    pub q: f64,
    pub coeffs: RelPermCoeffs,
    pub fields: FieldMaps,
    /// `[12, N_r, N_z]`.
    pub sg: Vec<f32>,
    /// `[12, N_r, N_z]`, bar.
    pub dp: Vec<f32>,
    pub fractal: FractalParams,
}

impl Sample {
    pub fn target(&self, t: Target) -> &[f32] {
        match t {
            Target::Sg => &self.sg,
            Target::Dp => &self.dp,
        }
    }

    /// `Q` followed by the six curve coefficients.
    pub fn scalars(&self) -> [f64; 7] {
        let c = self.coeffs.to_array();
        [self.q, c[0], c[1], c[2], c[3], c[4], c[5]]
    }
}

/// Ranges the per-sample fractal parameters are drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FractalRanges {
    pub k_base: (f64, f64),
    pub hurst: (f64, f64),
    pub anisotropy_ratio: (f64, f64),
    pub sigma_ln: f64,
}

impl Default for FractalRanges {
    fn default() -> Self {
        FractalRanges {
            k_base: (250.0, 350.0),
            hurst: (0.3, 0.8),
            anisotropy_ratio: (1.0, 4.0),
            sigma_ln: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub grid_nr: usize,
    pub grid_nz: usize,
    pub toy: ToyConstants,
    pub fractal: FractalRanges,
    pub aniso: AnisoParams,
    pub porosity_noise: f64,
    /// Replaces the sampled curve coefficients in every sample.
    pub fixed_coeffs: Option<RelPermCoeffs>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            grid_nr: 192,
            grid_nz: 64,
            toy: ToyConstants::default(),
            fractal: FractalRanges::default(),
            aniso: AnisoParams::default(),
            porosity_noise: 0.005,
            fixed_coeffs: None,
        }
    }
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// Sample `index` of the dataset seeded by `seed`. Depends only on
/// `(seed, index, config)`.
pub fn generate_sample(seed: u64, index: usize, cfg: &GenConfig, grid: &Grid) -> Result<Sample> {
    let scalars = lhs::block_lhs_row(seed, index, &SCALAR_RANGES)?;
    let coeffs = match cfg.fixed_coeffs {
        Some(c) => c,
        None => RelPermCoeffs::from_array(scalars[1..].try_into().unwrap()),
    };
    coeffs.validate()?;
    let idx = index as u64;
    let mut pr = rng::stream(seed, &[tags::SAMPLE, idx, tags::FRACTAL_PARAMS]);
    let fr = &cfg.fractal;
    let fractal = FractalParams {
        k_min: KH_RANGE.0,
        k_base: pr.random_range(fr.k_base.0..=fr.k_base.1),
        k_max: KH_RANGE.1,
        hurst: pr.random_range(fr.hurst.0..=fr.hurst.1),
        anisotropy_ratio: pr.random_range(fr.anisotropy_ratio.0..=fr.anisotropy_ratio.1),
        rotation: pr.random_range(0.0..std::f64::consts::PI),
        sigma_ln: fr.sigma_ln,
    };
    let (nr, nz) = (grid.nr, grid.nz);
    let kh = fractal_kh(rng::derive_seed(seed, &[tags::SAMPLE, idx, tags::KH]), nr, nz, &fractal)?;
    let aniso = aniso_map(rng::derive_seed(seed, &[tags::SAMPLE, idx, tags::ANISO]), nr, nz, &cfg.aniso);
    let phi = porosity_from_perm(
        &kh,
        rng::derive_seed(seed, &[tags::SAMPLE, idx, tags::PHI]),
        cfg.porosity_noise,
    );
    let fields = FieldMaps {
        kh: to_f32(&kh),
        aniso: to_f32(&aniso),
        phi: to_f32(&phi),
    };
    let (sg, dp) = toy_targets(&fields, scalars[0], &coeffs, grid, &cfg.toy)?;
    Ok(Sample {
        index,
        q: scalars[0],
        coeffs,
        fields,
        sg: to_f32(&sg),
        dp: to_f32(&dp),
        fractal,
    })
}

/// Samples `0..n`, generated in parallel.
pub fn generate_samples(n: usize, seed: u64, cfg: &GenConfig) -> Result<Vec<Sample>> {
    if n == 0 {
        return Err(Error::Config("number of samples must be at least 1".into()));
    }
    let grid = Grid::new(cfg.grid_nr, cfg.grid_nz)?;
    (0..n)
        .into_par_iter()
        .map(|i| generate_sample(seed, i, cfg, &grid))
        .collect()
}

pub fn generate_dataset(n: usize, seed: u64, cfg: &GenConfig) -> Result<Dataset> {
    Ok(Dataset {
        grid: Grid::new(cfg.grid_nr, cfg.grid_nz)?,
        seed,
        config: cfg.clone(),
        samples: generate_samples(n, seed, cfg)?,
    })
}

/// Number of training samples in a dataset of `n`: the first `ceil(0.923 n)`.
pub fn train_count(n: usize) -> usize {
    ((0.923 * n as f64).ceil() as usize).min(n)
}

/// One row of the summary statistics table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatRow {
    pub variable: String,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub std: f64,
}

fn stat_row(name: &str, values: impl Iterator<Item = f64>) -> StatRow {
    let (mut n, mut sum, mut sq) = (0.0, 0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        n += 1.0;
        sum += v;
        sq += v * v;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mean = sum / n;
    StatRow {
        variable: name.into(),
        max: hi,
        min: lo,
        mean,
        std: (sq / n - mean * mean).max(0.0).sqrt(),
    }
}

/// Pooled statistics of every input variable and both targets.
pub fn summarize(samples: &[Sample]) -> Vec<StatRow> {
    let mut rows = vec![
        stat_row("kh", samples.iter().flat_map(|s| s.fields.kh.iter().map(|&v| v as f64))),
        stat_row("kv/kh", samples.iter().flat_map(|s| s.fields.aniso.iter().map(|&v| v as f64))),
        stat_row("phi", samples.iter().flat_map(|s| s.fields.phi.iter().map(|&v| v as f64))),
    ];
    for (k, name) in SCALAR_NAMES.iter().enumerate() {
        rows.push(stat_row(name, samples.iter().map(|s| s.scalars()[k])));
    }
    rows.push(stat_row("sg", samples.iter().flat_map(|s| s.sg.iter().map(|&v| v as f64))));
    rows.push(stat_row("dp", samples.iter().flat_map(|s| s.dp.iter().map(|&v| v as f64))));
    rows
}
