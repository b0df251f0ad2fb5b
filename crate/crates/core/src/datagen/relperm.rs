//! Modified Brooks-Corey relative permeability curves and their least-squares
//! fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelPermCoeffs {
    pub krw_max: f64,
    pub krg_max: f64,
    pub swi: f64,
    pub sgr: f64,
    pub m: f64,
    pub n: f64,
}

impl RelPermCoeffs {
    pub fn new(krw_max: f64, krg_max: f64, swi: f64, sgr: f64, m: f64, n: f64) -> Result<Self> {
        let c = RelPermCoeffs {
            krw_max,
            krg_max,
            swi,
            sgr,
            m,
            n,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.to_array().iter().all(|v| v.is_finite())
            && self.krw_max > 0.0
            && self.krw_max <= 1.0
            && self.krg_max > 0.0
            && self.krg_max <= 1.0
            && self.swi >= 0.0
            && self.sgr >= 0.0
            && self.swi + self.sgr < 1.0
            && self.m > 0.0
            && self.n > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCoefficients(format!("{self:?}")))
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.krw_max, self.krg_max, self.swi, self.sgr, self.m, self.n]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        RelPermCoeffs {
            krw_max: a[0],
            krg_max: a[1],
            swi: a[2],
            sgr: a[3],
            m: a[4],
            n: a[5],
        }
    }

    /// Width of the mobile saturation range, `1 - Swi - Sgr`.
    pub fn mobile_range(&self) -> f64 {
        1.0 - self.swi - self.sgr
    }

    /// Boon et al. 2022.
    pub const CASE_A: RelPermCoeffs = RelPermCoeffs {
        krw_max: 0.768,
        krg_max: 0.031,
        swi: 0.50,
        sgr: 0.03,
        m: 3.808,
        n: 1.052,
    };

    /// Yekta et al. 2018, shallow.
    pub const CASE_B: RelPermCoeffs = RelPermCoeffs {
        krw_max: 0.642,
        krg_max: 0.056,
        swi: 0.37,
        sgr: 0.08,
        m: 1.453,
        n: 3.317,
    };

    /// Yekta et al. 2018, deep.
    pub const CASE_C: RelPermCoeffs = RelPermCoeffs {
        krw_max: 0.530,
        krg_max: 0.042,
        swi: 0.34,
        sgr: 0.12,
        m: 1.560,
        n: 1.930,
    };
}

/// `(krw, krg)` at water saturation `sw`. Normalized saturations are clamped
/// to `[0, 1]`, so values outside the mobile range saturate at the endpoints.
pub fn mbc_eval(sw: f64, c: &RelPermCoeffs) -> Result<(f64, f64)> {
    c.validate()?;
    Ok(mbc_unchecked(sw, c))
}

pub(crate) fn mbc_unchecked(sw: f64, c: &RelPermCoeffs) -> (f64, f64) {
    let d = c.mobile_range();
    if sw <= c.swi {
        return (0.0, c.krg_max);
    }
    if sw >= 1.0 - c.sgr {
        return (c.krw_max, 0.0);
    }
    let sw_n = ((sw - c.swi) / d).clamp(0.0, 1.0);
    let sg_n = ((1.0 - c.sgr - sw) / d).clamp(0.0, 1.0);
    (c.krw_max * sw_n.powf(c.m), c.krg_max * sg_n.powf(c.n))
}

/// One measured point of a relative permeability curve pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sw: f64,
    pub krw: f64,
    pub krg: f64,
}

/// `count` evenly spaced points over the mobile range of `c`, endpoints included.
pub fn sample_curve(c: &RelPermCoeffs, count: usize) -> Vec<CurvePoint> {
    (0..count)
        .map(|i| {
            let sw = c.swi + c.mobile_range() * i as f64 / (count - 1).max(1) as f64;
            let (krw, krg) = mbc_unchecked(sw, c);
            CurvePoint { sw, krw, krg }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub coeffs: RelPermCoeffs,
    /// Sum of squared residuals over both curves.
    pub residual: f64,
    pub iterations: usize,
    /// Per point `(krw_fit - krw, krg_fit - krg)`.
    pub residuals: Vec<(f64, f64)>,
}

const LOWER: [f64; 6] = [1e-6, 1e-6, 0.0, 0.0, 0.05, 0.05];
const UPPER: [f64; 6] = [1.0, 1.0, 0.95, 0.95, 20.0, 20.0];
const MAX_ITER: usize = 500;
/// Mean squared residual treated as an exact fit.
const COST_FLOOR: f64 = 1e-24;
/// Relative cost decrease below which an accepted step ends the fit (MINPACK default).
const FTOL: f64 = 1.5e-8;

fn project(mut p: [f64; 6]) -> [f64; 6] {
    for i in 0..6 {
        p[i] = p[i].clamp(LOWER[i], UPPER[i]);
    }
    let total = p[2] + p[3];
    if total > 0.98 {
        p[2] *= 0.98 / total;
        p[3] *= 0.98 / total;
    }
    p
}

fn residuals(points: &[CurvePoint], p: &[f64; 6]) -> Vec<f64> {
    let c = RelPermCoeffs::from_array(*p);
    points
        .iter()
        .flat_map(|pt| {
            let (w, g) = mbc_unchecked(pt.sw, &c);
            [w - pt.krw, g - pt.krg]
        })
        .collect()
}

fn sse(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Solves the 6x6 system `a x = b` by Gaussian elimination with partial pivoting.
fn solve6(mut a: [[f64; 6]; 6], mut b: [f64; 6]) -> Option<[f64; 6]> {
    for col in 0..6 {
        let piv = (col..6).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..6 {
            let f = a[row][col] / a[col][col];
            for k in col..6 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 6];
    for row in (0..6).rev() {
        let s: f64 = (row + 1..6).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Joint least-squares fit of both curves by projected Levenberg-Marquardt.
pub fn mbc_fit(points: &[CurvePoint], init: &RelPermCoeffs) -> Result<FitResult> {
    if points.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.sw.is_finite() && p.krw.is_finite() && p.krg.is_finite())) {
        return Err(Error::InvalidArgument("non-finite curve point".into()));
    }
    let mut p = project(init.to_array());
    let mut r = residuals(points, &p);
    let mut cost = sse(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        // central-difference Jacobian, one column per parameter
        let mut jac = vec![[0.0; 6]; r.len()];
        for k in 0..6 {
            let h = 1e-7 * p[k].abs().max(1e-3);
            let (mut lo, mut hi) = (p, p);
            lo[k] -= h;
            hi[k] += h;
            let (rl, rh) = (residuals(points, &lo), residuals(points, &hi));
            for i in 0..r.len() {
                jac[i][k] = (rh[i] - rl[i]) / (2.0 * h);
            }
        }
        let mut jtj = [[0.0; 6]; 6];
        let mut jtr = [0.0; 6];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..6 {
                jtr[a] += row[a] * ri;
                for b in 0..6 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        // parameters pinned at a bound with the descent direction pointing out are frozen
        for k in 0..6 {
            if (p[k] <= LOWER[k] && jtr[k] > 0.0) || (p[k] >= UPPER[k] && jtr[k] < 0.0) {
                for j in 0..6 {
                    jtj[k][j] = 0.0;
                    jtj[j][k] = 0.0;
                }
                jtj[k][k] = 1.0;
                jtr[k] = 0.0;
            }
        }
        let gnorm = jtr.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if cost <= COST_FLOOR * r.len() as f64 || gnorm < 1e-15 {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj;
            for d in 0..6 {
                a[d][d] += lambda * jtj[d][d].max(1e-12);
            }
            let Some(step) = solve6(a, jtr.map(|v| -v)) else {
                lambda *= 10.0;
                continue;
            };
            let mut cand = p;
            for k in 0..6 {
                cand[k] += step[k];
            }
            let cand = project(cand);
            let rc = residuals(points, &cand);
            let cc = sse(&rc);
            if cc < cost {
                let rel = (cost - cc) / cost.max(1e-300);
                let moved = (0..6).map(|k| (cand[k] - p[k]).abs() / p[k].abs().max(1e-3)).fold(0.0, f64::max);
                p = cand;
                r = rc;
                cost = cc;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if rel < FTOL || moved < 1e-10 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no descent direction left at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    let coeffs = RelPermCoeffs::from_array(p);
    if !converged {
        return Err(Error::FitNotConverged {
            iterations,
            residual: cost,
            best: coeffs,
        });
    }
    Ok(FitResult {
        coeffs,
        residual: cost,
        iterations,
        residuals: r.chunks(2).map(|c| (c[0], c[1])).collect(),
    })
}

/// Starting point for fits: centre of the sampling ranges.
pub fn default_init() -> RelPermCoeffs {
    RelPermCoeffs::from_array(super::SCALAR_RANGES[1..].iter().map(|r| 0.5 * (r.0 + r.1)).collect::<Vec<_>>().try_into().unwrap())
}
