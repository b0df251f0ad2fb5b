//! Loss, optimizer and the epoch loop.

mod adam;
mod loss;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamConfig};
pub use loss::{lp_loss, LossConfig};

use crate::datagen::{Grid, Sample, Target};
use crate::error::{Error, Result};
use crate::layers::Module;
use crate::model::inputs::{make_batch, Encoded};
use crate::model::{save_checkpoint, FfinoModel};
use crate::rng::{self, tags};
use crate::tensor::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr0: f64,
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_samples: usize,
    pub batch_times: usize,
    pub seed: u64,
    pub target: Target,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    /// Write a checkpoint every this many epochs (and after the last).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 1e-3,
            lr_decay: 0.985,
            epochs: 50,
            batch_samples: 4,
            batch_times: 4,
            seed: 0,
            target: Target::Sg,
            loss: LossConfig::default(),
            adam: AdamConfig::default(),
            checkpoint_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        if !(self.lr0 > 0.0) || !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!(
                "need lr0 > 0 and 0 < lr_decay <= 1, got {} and {}",
                self.lr0, self.lr_decay
            )));
        }
        if self.batch_samples == 0 || self.batch_times == 0 || self.batch_times > 12 {
            return Err(Error::Config(format!(
                "batch sizes B_S={} B_T={} out of range (B_S >= 1, 1 <= B_T <= 12)",
                self.batch_samples, self.batch_times
            )));
        }
        Ok(())
    }

    /// Learning rate of epoch `e` (zero-based).
    pub fn lr(&self, epoch: usize) -> f64 {
        self.lr0 * self.lr_decay.powi(epoch as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub seconds: f64,
}

/// Where a run writes its artifacts.
#[derive(Clone, Debug, Default)]
pub struct TrainOutputs {
    pub checkpoint: Option<PathBuf>,
    pub loss_log: Option<PathBuf>,
}

/// Batch composition of one epoch: shuffled sample batches of `B_S`, each
/// paired with `B_T` distinct report steps (sorted).
pub fn epoch_plan(cfg: &TrainConfig, n: usize, steps: usize, epoch: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut r: ChaCha8Rng = rng::stream(cfg.seed, &[tags::EPOCH, epoch as u64]);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    order
        .chunks(cfg.batch_samples)
        .map(|ids| {
            let mut t = index::sample(&mut r, steps, cfg.batch_times.min(steps)).into_vec();
            t.sort_unstable();
            (ids.to_vec(), t)
        })
        .collect()
}

fn write_log(path: &PathBuf, log: &[EpochLog]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut s = String::from("epoch,lr,train_loss\n");
    for e in log {
        s.push_str(&format!("{},{:e},{:e}\n", e.epoch, e.lr, e.train_loss));
    }
    f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Largest magnitude of the target over the given samples; dp models are
/// trained on `dp / scale`.
pub fn output_scale(samples: &[Sample], target: Target) -> f64 {
    match target {
        Target::Sg => 1.0,
        Target::Dp => {
            let m = samples
                .iter()
                .flat_map(|s| s.dp.iter())
                .fold(0.0f64, |a, &v| a.max((v as f64).abs()));
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    }
}

/// Trains `model` on `samples` in place and returns the per-epoch log.
/// A non-finite loss aborts the run; the last written checkpoint is kept.
pub fn train<F: Real>(
    model: &mut FfinoModel<F>,
    samples: &[Sample],
    grid: &Grid,
    cfg: &TrainConfig,
    out: &TrainOutputs,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let mc = model.config();
    if (mc.grid_nr, mc.grid_nz) != (grid.nr, grid.nz) {
        return Err(Error::Config(format!(
            "model grid {}x{} does not match data grid {}x{}",
            mc.grid_nr, mc.grid_nz, grid.nr, grid.nz
        )));
    }
    let scale = mc.output_scale;
    let enc = Encoded::<F>::new(samples, grid)?;
    let mut opt = Adam::<F>::new(cfg.adam);
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let lr = cfg.lr(epoch);
        let mut total = 0.0;
        let plan = epoch_plan(cfg, samples.len(), grid.steps(), epoch);
        for (ids, steps) in &plan {
            let b = make_batch(samples, &enc, grid, ids, steps, cfg.target, scale)?;
            model.zero_grad();
            let pred = model.forward(&b.spatial, &b.scalars, &b.times)?;
            let loss = lp_loss(&b.target, &pred, &cfg.loss)?;
            let value = loss.item()?.as_f64();
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            loss.backward()?;
            drop(loss);
            drop(pred);
            opt.step(&mut model.params_mut(), lr)?;
            total += value;
        }
        let entry = EpochLog {
            epoch,
            lr,
            train_loss: total / plan.len() as f64,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&entry);
        log.push(entry);
        if let Some(path) = &out.loss_log {
            write_log(path, &log)?;
        }
        let last = epoch + 1 == cfg.epochs;
        if let Some(path) = &out.checkpoint {
            if last || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
                save_checkpoint(model, path)?;
            }
        }
    }
    Ok(log)
}
