use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub p: f64,
    pub beta: f64,
    /// Radii of the `r` axis. When set the derivative term divides by the
    /// physical spacing instead of differencing in index space.
    pub radii: Option<Vec<f64>>,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            p: 2.0,
            beta: 0.5,
            radii: None,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !(self.beta >= 0.0) {
            return Err(Error::Config(format!("loss needs p >= 1 and beta >= 0, got {self:?}")));
        }
        Ok(())
    }
}

fn check_nonzero<F: Real>(den: &Tensor<F>, what: &str) -> Result<()> {
    if let Some(i) = den.data().iter().position(|v| *v == F::zero()) {
        return Err(Error::DegenerateReference(format!("{what} of sample {i} is zero")));
    }
    Ok(())
}

/// Relative p-norm loss with an `r`-derivative term:
/// `|y - y_hat| / |y| + beta |d(y - y_hat)/dr| / |dy/dr|`, each norm taken
/// per sample (leading axis) and the result averaged over samples. The `r`
/// axis is the second to last.
pub fn lp_loss<F: Real>(y: &Tensor<F>, y_hat: &Tensor<F>, cfg: &LossConfig) -> Result<Tensor<F>> {
    cfg.validate()?;
    if y.shape() != y_hat.shape() {
        return Err(Error::shape("lp_loss", y.shape(), y_hat.shape()));
    }
    let y = y.detach();
    let err = y_hat.sub(&y)?;
    let den = y.pnorm_rows(cfg.p)?;
    check_nonzero(&den, "reference norm")?;
    let mut loss = err.pnorm_rows(cfg.p)?.div(&den)?;
    if cfg.beta > 0.0 {
        if y.ndim() < 3 {
            return Err(Error::invalid_shape(
                "lp_loss",
                format!("derivative term needs [B, .., N_r, N_z], got {:?}", y.shape()),
            ));
        }
        let axis = y.ndim() - 2;
        let d = |t: &Tensor<F>| -> Result<Tensor<F>> {
            let dt = t.diff(axis)?;
            match &cfg.radii {
                None => Ok(dt),
                Some(r) => {
                    let n = y.shape()[axis];
                    if r.len() != n {
                        return Err(Error::Config(format!("{} radii for an r axis of {n}", r.len())));
                    }
                    let inv: Vec<f64> = r.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
                    dt.mul(&Tensor::from_f64(&[n - 1, 1], &inv)?)
                }
            }
        };
        let dden = d(&y)?.pnorm_rows(cfg.p)?;
        check_nonzero(&dden, "reference r-derivative norm")?;
        let term = d(&err)?.pnorm_rows(cfg.p)?.div(&dden)?;
        loss = loss.add(&term.scale(F::of(cfg.beta)))?;
    }
    Ok(loss.mean())
}
