//! Analytic two-phase response used as ground truth for learning: a
//! Buckley-Leverett front for gas saturation and a line-source (Theis)
//! solution for pressure buildup. It is a smooth, deterministic stand-in for
//! a reservoir simulator, not a replacement for one.

use serde::{Deserialize, Serialize};

use super::relperm::{mbc_unchecked, RelPermCoeffs};
use super::{FieldMaps, Grid};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConstants {
    /// Gas viscosity, mPa s.
    pub mu_g: f64,
    /// Water viscosity at 50 °C, mPa s.
    pub mu_w: f64,
    /// Aquifer thickness, m.
    pub thickness: f64,
    /// Diffusivity per unit permeability, m² / (mD day).
    pub eta0: f64,
    /// Pressure scale, bar mD / (m³/day mPa s).
    pub amplitude: f64,
}

impl Default for ToyConstants {
    fn default() -> Self {
        ToyConstants {
            mu_g: 0.0094,
            mu_w: 0.547,
            thickness: 97.536,
            eta0: 700.0,
            amplitude: 3e-3,
        }
    }
}

/// Gas fractional flow `f_g(S_g)` and its derivative.
pub fn frac_flow(sg: f64, c: &RelPermCoeffs, mu_g: f64, mu_w: f64) -> (f64, f64) {
    let d = c.mobile_range();
    let (krw, krg) = mbc_unchecked(1.0 - sg, c);
    let sg_n = (sg - c.sgr) / d;
    let sw_n = (1.0 - sg - c.swi) / d;
    let dkrg = if (0.0..=1.0).contains(&sg_n) && sg_n > 0.0 {
        c.krg_max * c.n * sg_n.powf(c.n - 1.0) / d
    } else {
        0.0
    };
    let dkrw = if (0.0..=1.0).contains(&sw_n) && sw_n > 0.0 {
        -c.krw_max * c.m * sw_n.powf(c.m - 1.0) / d
    } else {
        0.0
    };
    let (lg, lw) = (krg / mu_g, krw / mu_w);
    let total = lg + lw;
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let f = lg / total;
    let df = (dkrg / mu_g * lw - lg * dkrw / mu_w) / (total * total);
    (f, df)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelgeFront {
    /// Gas saturation behind the shock.
    pub s_front: f64,
    /// Chord slope `f_g(S*) / S*`, the dimensionless front speed.
    pub slope: f64,
}

/// Tangent from the origin to the fractional flow curve. Scans for the
/// maximum chord slope, then bisects the tangency condition
/// `f'(S) S - f(S) = 0` inside the bracketing cells.
pub fn welge_front(c: &RelPermCoeffs, mu_g: f64, mu_w: f64) -> WelgeFront {
    let lo = c.sgr;
    let hi = 1.0 - c.swi;
    let chord = |s: f64| frac_flow(s, c, mu_g, mu_w).0 / s;
    const SCAN: usize = 4096;
    let pts: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let best = (1..=SCAN)
        .max_by(|&a, &b| chord(pts[a]).total_cmp(&chord(pts[b])))
        .unwrap();
    let h = |s: f64| {
        let (f, df) = frac_flow(s, c, mu_g, mu_w);
        df * s - f
    };
    let mut s = pts[best];
    if best < SCAN {
        let (mut a, mut b) = (pts[best - 1].max(lo + 1e-12), pts[best + 1]);
        if h(a) > 0.0 && h(b) < 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if h(mid) > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            s = 0.5 * (a + b);
        }
    }
    WelgeFront {
        s_front: s,
        slope: chord(s),
    }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x)` for `x > 0`: power series below 1, modified
/// Lentz continued fraction above.
pub fn e1(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        if x > 745.0 {
            return 0.0;
        }
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

fn row_means(field: &[f32], nr: usize, nz: usize) -> Vec<f64> {
    (0..nz)
        .map(|j| (0..nr).map(|i| field[i * nz + j] as f64).sum::<f64>() / nr as f64)
        .collect()
}

/// Saturation and pressure buildup, each `[12, N_r, N_z]` row-major.
pub fn toy_targets(
    fields: &FieldMaps,
    q: f64,
    coeffs: &RelPermCoeffs,
    grid: &Grid,
    k: &ToyConstants,
) -> Result<(Vec<f64>, Vec<f64>)> {
    coeffs.validate()?;
    let (nr, nz) = (grid.nr, grid.nz);
    let front = welge_front(coeffs, k.mu_g, k.mu_w);
    let kh_row = row_means(&fields.kh, nr, nz);
    let phi_row = row_means(&fields.phi, nr, nz);
    let kh_mean = kh_row.iter().sum::<f64>() / nz as f64;
    let a_mean = fields.aniso.iter().map(|&v| v as f64).sum::<f64>() / fields.aniso.len() as f64;
    // vertical communication evens out the layer-wise flow split
    let weight: Vec<f64> = kh_row
        .iter()
        .map(|kr| (1.0 - a_mean) * kr / kh_mean + a_mean)
        .collect();
    let cap = 1.0 - coeffs.swi;
    let plane = nr * nz;
    let mut sg = vec![0.0; grid.report_days.len() * plane];
    let mut dp = vec![0.0; grid.report_days.len() * plane];
    for (ti, &t) in grid.report_days.iter().enumerate() {
        for j in 0..nz {
            let rf2 = q * t * front.slope * weight[j] / (std::f64::consts::PI * k.thickness * phi_row[j]);
            let diff = 4.0 * k.eta0 * kh_row[j] * t;
            let scale = k.amplitude * q * k.mu_w / kh_row[j];
            for (i, &r) in grid.r_centers.iter().enumerate() {
                let idx = ti * plane + i * nz + j;
                let ratio = r * r / rf2;
                if ratio < 1.0 {
                    sg[idx] = (front.s_front * (1.0 - ratio).sqrt()).min(cap);
                }
                dp[idx] = scale * e1(r * r / diff);
            }
        }
    }
    Ok((sg, dp))
}
