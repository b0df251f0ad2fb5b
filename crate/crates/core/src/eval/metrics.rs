use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_len(op: &'static str, y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::shape(op, &[y.len()], &[y_hat.len()]));
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument(format!("{op} of empty input")));
    }
    Ok(())
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_len("r2", y, y_hat)?;
    if y.len() < 2 {
        return Err(Error::InvalidArgument("r2 needs at least 2 values".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateReference("r2 reference has zero variance".into()));
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check_len("rmse", y, y_hat)?;
    let s: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((s / y.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AoiConfig {
    pub sg_threshold: f64,
    pub dp_threshold: f64,
}

impl Default for AoiConfig {
    fn default() -> Self {
        AoiConfig {
            sg_threshold: 0.01,
            dp_threshold: 0.005,
        }
    }
}

impl AoiConfig {
    pub fn threshold(&self, target: crate::datagen::Target) -> f64 {
        match target {
            crate::datagen::Target::Sg => self.sg_threshold,
            crate::datagen::Target::Dp => self.dp_threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mre {
    pub value: f64,
    /// Set when no reference cell reaches the threshold; `value` is then 0.
    pub empty_aoi: bool,
}

/// `sum_AOI |y_hat - y| / sum_AOI |y|` over cells with `y >= threshold`.
pub fn mre_aoi(y: &[f64], y_hat: &[f64], threshold: f64) -> Result<Mre> {
    check_len("mre_aoi", y, y_hat)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in y.iter().zip(y_hat) {
        if *a >= threshold {
            num += (b - a).abs();
            den += a.abs();
        }
    }
    if den == 0.0 {
        return Ok(Mre {
            value: 0.0,
            empty_aoi: true,
        });
    }
    Ok(Mre {
        value: num / den,
        empty_aoi: false,
    })
}

/// Mean over AOI cells of `|y_hat - y| / |y|`.
pub fn mre_aoi_per_cell(y: &[f64], y_hat: &[f64], threshold: f64) -> Result<Mre> {
    check_len("mre_aoi_per_cell", y, y_hat)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (a, b) in y.iter().zip(y_hat) {
        if *a >= threshold && *a != 0.0 {
            sum += ((b - a) / a).abs();
            n += 1;
        }
    }
    Ok(if n == 0 {
        Mre {
            value: 0.0,
            empty_aoi: true,
        }
    } else {
        Mre {
            value: sum / n as f64,
            empty_aoi: false,
        }
    })
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Normalized 1-D Gaussian of `SSIM_WINDOW` taps.
pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        *v = (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Separable weighted sum over every valid window position.
fn filter(x: &[f64], h: usize, w: usize, g: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let k = SSIM_WINDOW;
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            rows[i * ow + j] = (0..k).map(|t| g[t] * x[i * w + j + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = (0..k).map(|t| g[t] * rows[(i + t) * ow + j]).sum();
        }
    }
    out
}

/// Mean SSIM over valid 11×11 Gaussian windows of two `[h, w]` fields with
/// dynamic range `l`.
pub fn ssim_with_range(y: &[f64], y_hat: &[f64], h: usize, w: usize, l: f64) -> Result<f64> {
    check_len("ssim", y, y_hat)?;
    if y.len() != h * w {
        return Err(Error::shape("ssim", &[y.len()], &[h, w]));
    }
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::invalid_shape(
            "ssim",
            format!("field {h}x{w} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"),
        ));
    }
    if !(l > 0.0) {
        return Err(Error::DegenerateReference(format!("ssim dynamic range {l}")));
    }
    let g = gaussian_window();
    let (c1, c2) = ((SSIM_K1 * l).powi(2), (SSIM_K2 * l).powi(2));
    let xx: Vec<f64> = y.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y_hat.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| a * b).collect();
    let mx = filter(y, h, w, &g);
    let my = filter(y_hat, h, w, &g);
    let sxx = filter(&xx, h, w, &g);
    let syy = filter(&yy, h, w, &g);
    let sxy = filter(&xy, h, w, &g);
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (a, b) = (mx[i], my[i]);
            let va = sxx[i] - a * a;
            let vb = syy[i] - b * b;
            let cov = sxy[i] - a * b;
            ((2.0 * a * b + c1) * (2.0 * cov + c2)) / ((a * a + b * b + c1) * (va + vb + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// SSIM with the range taken from the reference, `max(y) - min(y)`.
pub fn ssim(y: &[f64], y_hat: &[f64], h: usize, w: usize) -> Result<f64> {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    ssim_with_range(y, y_hat, h, w, hi - lo)
}

/// Per-step SSIM of `[steps, h, w]` series, averaged over steps whose
/// reference is not constant.
pub fn ssim_series(y: &[f64], y_hat: &[f64], steps: usize, h: usize, w: usize) -> Result<f64> {
    check_len("ssim_series", y, y_hat)?;
    let plane = h * w;
    if y.len() != steps * plane {
        return Err(Error::shape("ssim_series", &[y.len()], &[steps, h, w]));
    }
    let mut values = Vec::with_capacity(steps);
    for k in 0..steps {
        let (a, b) = (&y[k * plane..(k + 1) * plane], &y_hat[k * plane..(k + 1) * plane]);
        match ssim(a, b, h, w) {
            Ok(v) => values.push(v),
            Err(Error::DegenerateReference(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::DegenerateReference("every time step has a constant reference".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
