//! Random spatial fields on the `[N_r, N_z]` grid: fractal permeability,
//! skew-normal anisotropy and permeability-correlated porosity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{ANISO_RANGE, KH_RANGE, PHI_RANGE};
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::fft::fft_lines;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalParams {
    pub k_min: f64,
    pub k_base: f64,
    pub k_max: f64,
    pub hurst: f64,
    /// Correlation length ratio between the rotated principal axes.
    pub anisotropy_ratio: f64,
    /// Rotation of the principal axes, radians.
    pub rotation: f64,
    /// Standard deviation of `ln k` at the reference roughness.
    pub sigma_ln: f64,
}

impl FractalParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.k_min > 0.0
            && self.k_min < self.k_base
            && self.k_base < self.k_max
            && self.hurst > 0.0
            && self.anisotropy_ratio >= 1.0
            && self.sigma_ln >= 0.0
            && self.rotation.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate fractal parameters {self:?}")))
        }
    }
}

fn signed_freq(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Power-law amplitude `(2|k|)^-(H+1)` on the stretched, rotated wavevector.
fn amplitudes(nr: usize, nz: usize, hurst: f64, ratio: f64, rotation: f64) -> Vec<f64> {
    let (s, c) = rotation.sin_cos();
    let mut a = vec![0.0; nr * nz];
    for i in 0..nr {
        let kr = signed_freq(i, nr);
        for j in 0..nz {
            if i == 0 && j == 0 {
                continue;
            }
            let kz = signed_freq(j, nz);
            let u = (c * kr + s * kz) * ratio;
            let v = -s * kr + c * kz;
            let k = (u * u + v * v).sqrt().max(0.5);
            a[i * nz + j] = (2.0 * k).powf(-(hurst + 1.0));
        }
    }
    a
}

/// Zero-mean Gaussian field with power spectrum `|k|^-(2H+2)`, scaled by the
/// theoretical standard deviation of the same construction at `H = 0.5`.
fn spectral_field(rng: &mut ChaCha8Rng, nr: usize, nz: usize, hurst: f64, ratio: f64, rotation: f64) -> Vec<f64> {
    let amp = amplitudes(nr, nz, hurst, ratio, rotation);
    let reference: f64 = amplitudes(nr, nz, 0.5, ratio, rotation).iter().map(|a| a * a).sum();
    let mut spec: Vec<Complex<f64>> = amp
        .iter()
        .map(|&a| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(a * re, a * im)
        })
        .collect();
    // 2-D inverse transform: rows along z, then columns along r
    fft_lines(&mut spec, nz, true);
    let mut cols = vec![Complex::new(0.0, 0.0); nr * nz];
    for i in 0..nr {
        for j in 0..nz {
            cols[j * nr + i] = spec[i * nz + j];
        }
    }
    fft_lines(&mut cols, nr, true);
    let norm = reference.sqrt();
    let mut out = vec![0.0; nr * nz];
    for i in 0..nr {
        for j in 0..nz {
            out[i * nz + j] = cols[j * nr + i].re / norm;
        }
    }
    out
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Fractal horizontal permeability (mD), row-major `[nr, nz]`. The log field
/// is median-centred so the median lands on `k_base` before clamping.
pub fn fractal_kh(seed: u64, nr: usize, nz: usize, p: &FractalParams) -> Result<Vec<f64>> {
    p.validate()?;
    let mut r = rng::stream(seed, &[]);
    let g = spectral_field(&mut r, nr, nz, p.hurst, p.anisotropy_ratio, p.rotation);
    let med = median(&g);
    Ok(g.iter()
        .map(|v| (p.k_base.ln() + p.sigma_ln * (v - med)).exp().clamp(p.k_min, p.k_max))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnisoParams {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
    /// Roughness of the two underlying Gaussian fields.
    pub hurst: f64,
}

impl Default for AnisoParams {
    fn default() -> Self {
        AnisoParams {
            location: 0.141,
            scale: 0.212,
            shape: 4.0,
            hurst: 0.75,
        }
    }
}

fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let std = if std > 0.0 { std } else { 1.0 };
    v.iter_mut().for_each(|x| *x = (*x - mean) / std);
}

/// Spatially coherent skew-normal anisotropy `k_v/k_h`, clamped to `[0.01, 1]`.
/// Uses `delta |U0| + sqrt(1 - delta^2) U1` with `U0`, `U1` standardized
/// smooth Gaussian fields and `delta = a / sqrt(1 + a^2)`.
pub fn aniso_map(seed: u64, nr: usize, nz: usize, p: &AnisoParams) -> Vec<f64> {
    let mut r = rng::stream(seed, &[]);
    let mut u0 = spectral_field(&mut r, nr, nz, p.hurst, 1.0, 0.0);
    let mut u1 = spectral_field(&mut r, nr, nz, p.hurst, 1.0, 0.0);
    standardize(&mut u0);
    standardize(&mut u1);
    let delta = p.shape / (1.0 + p.shape * p.shape).sqrt();
    let tail = (1.0 - delta * delta).sqrt();
    u0.iter()
        .zip(&u1)
        .map(|(a, b)| (p.location + p.scale * (delta * a.abs() + tail * b)).clamp(ANISO_RANGE.0, ANISO_RANGE.1))
        .collect()
}

/// Coefficients `(a, b)` of `phi = a + b log10(kh)` mapping the permeability
/// range onto the porosity range.
pub fn porosity_line() -> (f64, f64) {
    let b = (PHI_RANGE.1 - PHI_RANGE.0) / (KH_RANGE.1 / KH_RANGE.0).log10();
    (PHI_RANGE.0 - b * KH_RANGE.0.log10(), b)
}

/// Log-linear porosity plus i.i.d. Gaussian noise, clamped to range.
pub fn porosity_from_perm(kh: &[f64], seed: u64, noise_std: f64) -> Vec<f64> {
    let (a, b) = porosity_line();
    let mut r = rng::stream(seed, &[]);
    kh.iter()
        .map(|&k| {
            let noise = if noise_std > 0.0 {
                noise_std * r.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            (a + b * k.log10() + noise).clamp(PHI_RANGE.0, PHI_RANGE.1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn porosity_endpoints() {
        let phi = porosity_from_perm(&[44.1, 1000.0], 0, 0.0);
        assert!((phi[0] - 0.140).abs() < 1e-12);
        assert!((phi[1] - 0.345).abs() < 1e-12);
    }

    #[test]
    fn kh_in_range_and_deterministic() {
        let p = FractalParams {
            k_min: 44.1,
            k_base: 300.0,
            k_max: 1000.0,
            hurst: 0.5,
            anisotropy_ratio: 2.0,
            rotation: 0.3,
            sigma_ln: 0.4,
        };
        let a = fractal_kh(3, 24, 8, &p).unwrap();
        assert_eq!(a, fractal_kh(3, 24, 8, &p).unwrap());
        assert!(a.iter().all(|&k| (44.1..=1000.0).contains(&k)));
        let bad = FractalParams { k_base: 20.0, ..p };
        assert!(fractal_kh(3, 24, 8, &bad).is_err());
    }
}
