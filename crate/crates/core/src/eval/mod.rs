//! R², RMSE, SSIM and AOI-restricted MRE; per-sample reports, scatter
//! density tables and heatmaps.

pub mod image;
mod metrics;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use metrics::{
    gaussian_window, mre_aoi, mre_aoi_per_cell, r2, rmse, ssim, ssim_series, ssim_with_range, AoiConfig, Mre,
    SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW,
};

use crate::datagen::{Grid, Sample, Target};
use crate::error::{Error, Result};
use crate::model::inputs::{make_batch, Encoded};
use crate::model::FfinoModel;
use crate::tensor::{no_grad, Real};

/// Anything that maps a sample to a `[12, N_r, N_z]` prediction in physical units.
pub trait Predictor {
    fn predict(&self, sample: &Sample, grid: &Grid) -> Result<Vec<f64>>;
}

/// Returns the reference itself; a perfect model for pipeline checks.
pub struct OraclePredictor(pub Target);

impl Predictor for OraclePredictor {
    fn predict(&self, sample: &Sample, _grid: &Grid) -> Result<Vec<f64>> {
        Ok(sample.target(self.0).iter().map(|&v| v as f64).collect())
    }
}

impl<F: Real> Predictor for FfinoModel<F> {
    fn predict(&self, sample: &Sample, grid: &Grid) -> Result<Vec<f64>> {
        let c = self.config();
        if (c.grid_nr, c.grid_nz) != (grid.nr, grid.nz) {
            return Err(Error::Config(format!(
                "checkpoint grid {}x{} does not match dataset grid {}x{}",
                c.grid_nr, c.grid_nz, grid.nr, grid.nz
            )));
        }
        let one = std::slice::from_ref(sample);
        let enc = Encoded::<F>::new(one, grid)?;
        let steps: Vec<usize> = (0..grid.steps()).collect();
        let b = make_batch(one, &enc, grid, &[0], &steps, c.target, c.output_scale)?;
        let y = no_grad(|| self.forward(&b.spatial, &b.scalars, &b.times))?;
        let clamp = c.target == Target::Sg;
        Ok(y.data()
            .iter()
            .map(|v| {
                let v = v.as_f64() * c.output_scale;
                if clamp {
                    v.clamp(0.0, 1.0)
                } else {
                    v
                }
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub index: usize,
    pub r2: f64,
    pub rmse: f64,
    pub ssim: f64,
    pub mre: f64,
    pub empty_aoi: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Summary { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub r2: Summary,
    pub rmse: Summary,
    pub ssim: Summary,
    pub mre: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDefinitions {
    pub mre: String,
    pub ssim: String,
    pub r2: String,
    pub rmse: String,
}

impl Default for MetricDefinitions {
    fn default() -> Self {
        MetricDefinitions {
            mre: "sum over AOI of |pred - ref| / sum over AOI of |ref|; AOI = cells with ref >= threshold".into(),
            ssim: "mean over valid 11x11 Gaussian (sigma 1.5) windows, K1 0.01, K2 0.03, L = max - min of the reference per time step; averaged over time steps".into(),
            r2: "1 - SS_res / SS_tot over all cells and time steps of a sample".into(),
            rmse: "sqrt(mean squared error) over all cells and time steps of a sample".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub target: Target,
    pub count: usize,
    pub aoi: AoiConfig,
    pub definitions: MetricDefinitions,
    pub samples: Vec<SampleMetrics>,
    pub aggregate: Aggregate,
}

impl MetricReport {
    pub fn from_samples(target: Target, aoi: AoiConfig, samples: Vec<SampleMetrics>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no samples to report".into()));
        }
        let col = |f: fn(&SampleMetrics) -> f64| samples.iter().map(f).collect::<Vec<_>>();
        let aggregate = Aggregate {
            r2: Summary::of(&col(|s| s.r2)),
            rmse: Summary::of(&col(|s| s.rmse)),
            ssim: Summary::of(&col(|s| s.ssim)),
            mre: Summary::of(&col(|s| s.mre)),
        };
        Ok(MetricReport {
            target,
            count: samples.len(),
            aoi,
            definitions: MetricDefinitions::default(),
            samples,
            aggregate,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,r2,rmse,ssim,mre,empty_aoi\n");
        for m in &self.samples {
            let _ = writeln!(s, "{},{:e},{:e},{:e},{:e},{}", m.index, m.r2, m.rmse, m.ssim, m.mre, m.empty_aoi);
        }
        s
    }
}

/// All four metrics of one sample.
pub fn sample_metrics(index: usize, y: &[f64], y_hat: &[f64], grid: &Grid, threshold: f64) -> Result<SampleMetrics> {
    let mre = mre_aoi(y, y_hat, threshold)?;
    Ok(SampleMetrics {
        index,
        r2: r2(y, y_hat)?,
        rmse: rmse(y, y_hat)?,
        ssim: ssim_series(y, y_hat, grid.steps(), grid.nr, grid.nz)?,
        mre: mre.value,
        empty_aoi: mre.empty_aoi,
    })
}

/// 2-D histogram of reference vs prediction over a shared value range.
#[derive(Clone, Debug)]
pub struct ScatterDensity {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl ScatterDensity {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Self {
        ScatterDensity {
            bins,
            lo,
            hi: if hi > lo { hi } else { lo + 1.0 },
            counts: vec![0; bins * bins],
        }
    }

    fn bin(&self, v: f64) -> usize {
        let t = (v - self.lo) / (self.hi - self.lo);
        ((t * self.bins as f64).floor().max(0.0) as usize).min(self.bins - 1)
    }

    pub fn add(&mut self, y: &[f64], y_hat: &[f64]) {
        for (a, b) in y.iter().zip(y_hat) {
            let (i, j) = (self.bin(*a), self.bin(*b));
            self.counts[i * self.bins + j] += 1;
        }
    }

    pub fn to_csv(&self) -> String {
        let w = (self.hi - self.lo) / self.bins as f64;
        let mut s = String::from("ref_lo,ref_hi,pred_lo,pred_hi,count\n");
        for i in 0..self.bins {
            for j in 0..self.bins {
                let c = self.counts[i * self.bins + j];
                if c > 0 {
                    let (a, b) = (self.lo + i as f64 * w, self.lo + j as f64 * w);
                    let _ = writeln!(s, "{a:e},{:e},{b:e},{:e},{c}", a + w, b + w);
                }
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub aoi: AoiConfig,
    pub scatter_bins: usize,
    /// Heatmaps are written for the first this many samples.
    pub max_images: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            aoi: AoiConfig::default(),
            scatter_bins: 50,
            max_images: 4,
        }
    }
}

/// Reference / prediction / |error| rows, one column per report step.
pub fn triptych(y: &[f64], y_hat: &[f64], grid: &Grid) -> image::Canvas {
    let (nr, nz, nt) = (grid.nr, grid.nz, grid.steps());
    let plane = nr * nz;
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let err: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).collect();
    let emax = err.iter().cloned().fold(0.0, f64::max);
    let mut c = image::Canvas::new(nt * nr, 3 * nz);
    for k in 0..nt {
        let s = k * plane..(k + 1) * plane;
        c.panel(k * nr, 0, &y[s.clone()], nr, nz, lo, hi);
        c.panel(k * nr, nz, &y_hat[s.clone()], nr, nz, lo, hi);
        c.panel(k * nr, 2 * nz, &err[s], nr, nz, 0.0, emax);
    }
    c
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Scores `predictor` on `samples` and, if `out_dir` is given, writes
/// `report.json`, `per_sample.csv`, `scatter.csv` and heatmaps.
pub fn evaluate(
    predictor: &dyn Predictor,
    samples: &[Sample],
    grid: &Grid,
    target: Target,
    cfg: &EvalConfig,
    out_dir: Option<&Path>,
) -> Result<MetricReport> {
    if samples.is_empty() {
        return Err(Error::Config("test set is empty".into()));
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let threshold = cfg.aoi.threshold(target);
    let (lo, hi) = samples
        .iter()
        .flat_map(|s| s.target(target).iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v as f64), h.max(v as f64)));
    let mut scatter = ScatterDensity::new(cfg.scatter_bins.max(1), lo, hi);
    let mut rows = Vec::with_capacity(samples.len());
    for (k, s) in samples.iter().enumerate() {
        let y: Vec<f64> = s.target(target).iter().map(|&v| v as f64).collect();
        let y_hat = predictor.predict(s, grid)?;
        rows.push(sample_metrics(s.index, &y, &y_hat, grid, threshold)?);
        scatter.add(&y, &y_hat);
        if let Some(dir) = out_dir {
            if k < cfg.max_images {
                triptych(&y, &y_hat, grid).write(&dir.join(format!("sample_{}_{target}.ppm", s.index)))?;
            }
        }
    }
    let report = MetricReport::from_samples(target, cfg.aoi, rows)?;
    if let Some(dir) = out_dir {
        write_text(&dir.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
        write_text(&dir.join("per_sample.csv"), &report.to_csv())?;
        write_text(&dir.join("scatter.csv"), &scatter.to_csv())?;
    }
    Ok(report)
}
