use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ffino::datagen::relperm::{default_init, mbc_fit, CurvePoint, FitResult};
use ffino::datagen::{self, read_dataset, summarize, write_dataset, GenConfig, RelPermCoeffs, Sample, Target};
use ffino::eval::{self, EvalConfig, OraclePredictor, Predictor};
use ffino::layers::Module;
use ffino::model::{load_checkpoint, save_checkpoint, DecoderPreset, FfinoModel, ModelConfig};
use ffino::tensor::memory;
use ffino::training::{self, TrainConfig, TrainOutputs};
use ffino::{Error, Result};

use crate::manifest::{beside, io_err, Recorder};
use crate::require;

fn load_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

// ---------------------------------------------------------------- gen-data

#[derive(Args)]
pub struct GenDataArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, env = "FFINO_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_nr: Option<usize>,
    #[arg(long)]
    grid_nz: Option<usize>,
    /// Fixed curve coefficients (JSON from fit-relperm or a bare coefficient object).
    #[arg(long)]
    coeffs: Option<PathBuf>,
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct GenDataRun {
    n: usize,
    seed: u64,
    out: Option<PathBuf>,
    generator: GenConfig,
}

fn read_coeffs(path: &Path) -> Result<RelPermCoeffs> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let inner = v.get("coeffs").cloned().unwrap_or(v);
    let c: RelPermCoeffs =
        serde_json::from_value(inner).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    c.validate()?;
    Ok(c)
}

pub fn gen_data(a: GenDataArgs) -> Result<()> {
    let rec = Recorder::start("gen-data");
    let mut run: GenDataRun = load_config(&a.config)?;
    set(&mut run.n, a.n);
    set(&mut run.seed, a.seed);
    if a.out.is_some() {
        run.out = a.out;
    }
    set(&mut run.generator.grid_nr, a.grid_nr);
    set(&mut run.generator.grid_nz, a.grid_nz);
    if let Some(p) = &a.coeffs {
        run.generator.fixed_coeffs = Some(read_coeffs(p)?);
    }
    if run.n == 0 {
        return Err(Error::Config("--n must be at least 1".into()));
    }
    let out = require(run.out.clone(), "--out")?;
    let t = Instant::now();
    let ds = datagen::generate_dataset(run.n, run.seed, &run.generator)?;
    let gen_s = t.elapsed().as_secs_f64();
    write_dataset(&out, &ds)?;
    println!("{:<8} {:>12} {:>12} {:>12} {:>12}", "variable", "max", "min", "mean", "std");
    for r in summarize(&ds.samples) {
        println!("{:<8} {:>12.4} {:>12.4} {:>12.4} {:>12.4}", r.variable, r.max, r.min, r.mean, r.std);
    }
    println!("wrote {} samples ({}x{}) to {}", ds.len(), ds.grid.nr, ds.grid.nz, out.display());
    rec.finish(
        &beside(&out),
        &run,
        vec![run.seed],
        &[],
        &[&out],
        serde_json::json!({ "generate_seconds": gen_s }),
    )
}

// ------------------------------------------------------------- fit-relperm

#[derive(Args)]
pub struct FitArgs {
    /// CSV with columns Sw,krw,krg.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct FitRun {
    points: Option<PathBuf>,
    out: Option<PathBuf>,
    init: Option<RelPermCoeffs>,
}

fn read_points(path: &Path) -> Result<Vec<CurvePoint>> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Config(format!("{}: line 1: missing column {name}", path.display())))
    };
    let (ci, wi, gi) = (col("Sw")?, col("krw")?, col("krg")?);
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("{}: line {line}: bad number in column {}", path.display(), i + 1)))
        };
        pts.push(CurvePoint {
            sw: field(ci)?,
            krw: field(wi)?,
            krg: field(gi)?,
        });
    }
    if pts.is_empty() {
        return Err(Error::Config(format!("{}: no data rows", path.display())));
    }
    Ok(pts)
}

pub fn fit_relperm(a: FitArgs) -> Result<()> {
    let rec = Recorder::start("fit-relperm");
    let mut run: FitRun = load_config(&a.config)?;
    if a.points.is_some() {
        run.points = a.points;
    }
    if a.out.is_some() {
        run.out = a.out;
    }
    let points_path = require(run.points.clone(), "--points")?;
    let out = require(run.out.clone(), "--out")?;
    let pts = read_points(&points_path)?;
    let fit: FitResult = mbc_fit(&pts, &run.init.unwrap_or_else(default_init))?;
    std::fs::write(&out, serde_json::to_string_pretty(&fit)?).map_err(|e| io_err(&out, e))?;
    let c = &fit.coeffs;
    println!(
        "krw_max {:.4} krg_max {:.4} Swi {:.4} Sgr {:.4} m {:.4} n {:.4} (sse {:.3e}, {} iterations)",
        c.krw_max, c.krg_max, c.swi, c.sgr, c.m, c.n, fit.residual, fit.iterations
    );
    rec.finish(&beside(&out), &run, vec![], &[&points_path], &[&out], serde_json::json!({}))
}

// ------------------------------------------------------------------- train

#[derive(Clone, Copy, clap::ValueEnum)]
enum PresetArg {
    Ffino,
    FmionetLike,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    target: Option<Target>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, env = "FFINO_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Loss log CSV (defaults to `<out>.loss.csv`).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    modes_r: Option<usize>,
    #[arg(long)]
    modes_z: Option<usize>,
    #[arg(long)]
    unet_depth: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    #[arg(long)]
    batch_samples: Option<usize>,
    #[arg(long)]
    batch_times: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Train on every sample instead of the training split.
    #[arg(long)]
    all_samples: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct TrainRun {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    log: Option<PathBuf>,
    all_samples: bool,
    model: ModelConfig,
    train: TrainConfig,
}

pub fn train(a: TrainArgs) -> Result<()> {
    let rec = Recorder::start("train");
    let mut run: TrainRun = load_config(&a.config)?;
    if a.data.is_some() {
        run.data = a.data;
    }
    if a.out.is_some() {
        run.out = a.out;
    }
    if a.log.is_some() {
        run.log = a.log;
    }
    run.all_samples |= a.all_samples;
    set(&mut run.train.target, a.target);
    set(&mut run.train.epochs, a.epochs);
    set(&mut run.train.seed, a.seed);
    set(&mut run.train.lr0, a.lr);
    set(&mut run.train.lr_decay, a.lr_decay);
    set(&mut run.train.batch_samples, a.batch_samples);
    set(&mut run.train.batch_times, a.batch_times);
    set(&mut run.train.checkpoint_every, a.checkpoint_every);
    set(&mut run.model.width, a.width);
    set(&mut run.model.modes_r, a.modes_r);
    set(&mut run.model.modes_z, a.modes_z);
    set(&mut run.model.unet_depth, a.unet_depth);
    if let Some(p) = a.preset {
        run.model.decoder_preset = match p {
            PresetArg::Ffino => DecoderPreset::Ffino,
            PresetArg::FmionetLike => DecoderPreset::FmionetLike,
        };
    }
    run.train.validate()?;
    let data = require(run.data.clone(), "--data")?;
    let out = require(run.out.clone(), "--out")?;
    let log_path = run.log.clone().unwrap_or_else(|| {
        let mut s = out.as_os_str().to_owned();
        s.push(".loss.csv");
        PathBuf::from(s)
    });
    let ds = read_dataset(&data)?;
    let samples = if run.all_samples { &ds.samples[..] } else { ds.split().0 };
    run.model.target = run.train.target;
    run.model.grid_nr = ds.grid.nr;
    run.model.grid_nz = ds.grid.nz;
    run.model.output_scale = training::output_scale(samples, run.train.target);
    memory::reset_peak();
    let mut model = FfinoModel::<f32>::new(run.model.clone(), run.train.seed)?;
    println!(
        "target {} | {} training samples | {} parameters",
        run.train.target,
        samples.len(),
        model.param_count()
    );
    let outputs = TrainOutputs {
        checkpoint: Some(out.clone()),
        loss_log: Some(log_path.clone()),
    };
    let log = training::train(&mut model, samples, &ds.grid, &run.train, &outputs, |e| {
        println!("epoch {:>4}  lr {:.3e}  loss {:.5}  {:.2}s", e.epoch, e.lr, e.train_loss, e.seconds)
    });
    let log = match log {
        Ok(l) => l,
        Err(e) => {
            if matches!(e, Error::NonFinite(_)) && out.exists() {
                eprintln!("keeping last checkpoint {}", out.display());
            }
            return Err(e);
        }
    };
    if log.is_empty() {
        save_checkpoint(&model, &out)?;
    }
    let epoch_s: Vec<f64> = log.iter().map(|e| e.seconds).collect();
    let mean_epoch = if epoch_s.is_empty() { 0.0 } else { epoch_s.iter().sum::<f64>() / epoch_s.len() as f64 };
    let peak = memory::peak_bytes();
    println!(
        "parameters {} | train time {:.2} s/epoch | peak tensor memory {:.1} MiB",
        model.param_count(),
        mean_epoch,
        peak as f64 / (1 << 20) as f64
    );
    let manifest_path = beside(&out);
    rec.finish(
        &manifest_path,
        &run,
        vec![run.train.seed],
        &[&data],
        &[&out, &log_path],
        serde_json::json!({
            "param_count": model.param_count(),
            "seconds_per_epoch": mean_epoch,
            "epoch_seconds": epoch_s,
            "peak_tensor_bytes": peak,
        }),
    )
}

// -------------------------------------------------------------------- eval

#[derive(Clone, Copy, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Split {
    Train,
    #[default]
    Test,
    All,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Defaults to the checkpoint's target.
    #[arg(long)]
    target: Option<Target>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    split: Option<Split>,
    /// Score the references against themselves instead of a checkpoint.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct EvalRun {
    ckpt: Option<PathBuf>,
    data: Option<PathBuf>,
    target: Option<Target>,
    out_dir: Option<PathBuf>,
    split: Split,
    oracle: bool,
    eval: EvalConfig,
}

fn pick(ds: &datagen::Dataset, split: Split) -> &[Sample] {
    match split {
        Split::Train => ds.split().0,
        Split::Test => ds.split().1,
        Split::All => &ds.samples,
    }
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let rec = Recorder::start("eval");
    let mut run: EvalRun = load_config(&a.config)?;
    if a.ckpt.is_some() {
        run.ckpt = a.ckpt;
    }
    if a.data.is_some() {
        run.data = a.data;
    }
    if a.target.is_some() {
        run.target = a.target;
    }
    if a.out_dir.is_some() {
        run.out_dir = a.out_dir;
    }
    set(&mut run.split, a.split);
    run.oracle |= a.oracle;
    let data = require(run.data.clone(), "--data")?;
    let out_dir = require(run.out_dir.clone(), "--out-dir")?;
    let ds = read_dataset(&data)?;
    let mut samples = pick(&ds, run.split);
    if samples.is_empty() {
        eprintln!("split is empty, scoring every sample");
        samples = &ds.samples;
    }
    let mut inputs: Vec<PathBuf> = vec![data.clone()];
    let model;
    let (predictor, target): (Box<dyn Predictor>, Target) = if run.oracle {
        let t = run.target.unwrap_or_default();
        (Box::new(OraclePredictor(t)), t)
    } else {
        let ckpt = require(run.ckpt.clone(), "--ckpt")?;
        model = load_checkpoint::<f32>(&ckpt)?;
        inputs.push(ckpt);
        let t = model.config().target;
        if let Some(req) = run.target {
            if req != t {
                return Err(Error::Config(format!("checkpoint predicts {t}, --target asks for {req}")));
            }
        }
        (Box::new(model), t)
    };
    run.target = Some(target);
    create_dir(&out_dir)?;
    let report = eval::evaluate(predictor.as_ref(), samples, &ds.grid, target, &run.eval, Some(&out_dir))?;
    let g = &report.aggregate;
    println!("{} samples, target {target}", report.count);
    println!("R2   {:.4} ± {:.4}", g.r2.mean, g.r2.std);
    println!("RMSE {:.4} ± {:.4}", g.rmse.mean, g.rmse.std);
    println!("SSIM {:.4} ± {:.4}", g.ssim.mean, g.ssim.std);
    println!("MRE  {:.4} ± {:.4}", g.mre.mean, g.mre.std);
    let report_path = out_dir.join("report.json");
    let csv_path = out_dir.join("per_sample.csv");
    let scatter_path = out_dir.join("scatter.csv");
    let ins: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    rec.finish(
        &out_dir.join("manifest.json"),
        &run,
        vec![],
        &ins,
        &[&report_path, &csv_path, &scatter_path],
        serde_json::json!({}),
    )
}

// ----------------------------------------------------------------- predict

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    sample_index: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct PredictRun {
    ckpt: Option<PathBuf>,
    data: Option<PathBuf>,
    sample_index: usize,
    out_dir: Option<PathBuf>,
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let rec = Recorder::start("predict");
    let mut run: PredictRun = load_config(&a.config)?;
    if a.ckpt.is_some() {
        run.ckpt = a.ckpt;
    }
    if a.data.is_some() {
        run.data = a.data;
    }
    if a.out_dir.is_some() {
        run.out_dir = a.out_dir;
    }
    set(&mut run.sample_index, a.sample_index);
    let ckpt = require(run.ckpt.clone(), "--ckpt")?;
    let data = require(run.data.clone(), "--data")?;
    let out_dir = require(run.out_dir.clone(), "--out-dir")?;
    let ds = read_dataset(&data)?;
    let model = load_checkpoint::<f32>(&ckpt)?;
    let sample = ds
        .samples
        .iter()
        .find(|s| s.index == run.sample_index)
        .ok_or_else(|| Error::Config(format!("dataset has no sample {}", run.sample_index)))?;
    let target = model.config().target;
    let y: Vec<f64> = sample.target(target).iter().map(|&v| v as f64).collect();
    let y_hat = model.predict(sample, &ds.grid)?;
    create_dir(&out_dir)?;
    let g = &ds.grid;
    let plane = g.plane();
    let mut csv = String::from("step,day,ir,iz,r,z,reference,prediction,error\n");
    for k in 0..g.steps() {
        for i in 0..g.nr {
            for j in 0..g.nz {
                let c = k * plane + i * g.nz + j;
                csv.push_str(&format!(
                    "{k},{},{i},{j},{:e},{:e},{:e},{:e},{:e}\n",
                    g.report_days[k],
                    g.r_centers[i],
                    g.z_centers[j],
                    y[c],
                    y_hat[c],
                    y_hat[c] - y[c]
                ));
            }
        }
    }
    let csv_path = out_dir.join(format!("sample_{}_{target}.csv", sample.index));
    let img_path = out_dir.join(format!("sample_{}_{target}.ppm", sample.index));
    std::fs::write(&csv_path, csv).map_err(|e| io_err(&csv_path, e))?;
    eval::triptych(&y, &y_hat, g).write(&img_path)?;
    let m = eval::sample_metrics(sample.index, &y, &y_hat, g, EvalConfig::default().aoi.threshold(target))?;
    println!(
        "sample {}: R2 {:.4} RMSE {:.4} SSIM {:.4} MRE {:.4}",
        m.index, m.r2, m.rmse, m.ssim, m.mre
    );
    rec.finish(
        &out_dir.join(format!("sample_{}_{target}.manifest.json", sample.index)),
        &run,
        vec![],
        &[&ckpt, &data],
        &[&csv_path, &img_path],
        serde_json::json!({}),
    )
}

// ------------------------------------------------------------------- bench

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    ckpt: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Write the manifest here (defaults to `<ckpt>.bench.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(default)]
struct BenchRun {
    ckpt: Option<PathBuf>,
    data: Option<PathBuf>,
    repeats: usize,
    out: Option<PathBuf>,
}

impl Default for BenchRun {
    fn default() -> Self {
        BenchRun {
            ckpt: None,
            data: None,
            repeats: 5,
            out: None,
        }
    }
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let rec = Recorder::start("bench");
    let mut run: BenchRun = load_config(&a.config)?;
    if a.ckpt.is_some() {
        run.ckpt = a.ckpt;
    }
    if a.data.is_some() {
        run.data = a.data;
    }
    if a.out.is_some() {
        run.out = a.out;
    }
    set(&mut run.repeats, a.repeats);
    if run.repeats == 0 {
        return Err(Error::Config("--repeats must be at least 1".into()));
    }
    let ckpt = require(run.ckpt.clone(), "--ckpt")?;
    let data = require(run.data.clone(), "--data")?;
    let ds = read_dataset(&data)?;
    let model = load_checkpoint::<f32>(&ckpt)?;
    let mut samples = ds.split().1;
    if samples.is_empty() {
        samples = &ds.samples;
    }
    let mut per_sample = Vec::with_capacity(run.repeats);
    println!("repeat  seconds/sample");
    for k in 0..run.repeats {
        let t = Instant::now();
        for s in samples {
            model.predict(s, &ds.grid)?;
        }
        let v = t.elapsed().as_secs_f64() / samples.len() as f64;
        println!("{k:>6}  {v:.6}");
        per_sample.push(v);
    }
    let s = eval::Summary::of(&per_sample);
    println!(
        "{} parameters | {:.6} ± {:.6} s per sample over {} repeats of {} samples",
        model.param_count(),
        s.mean,
        s.std,
        run.repeats,
        samples.len()
    );
    let out = run.out.clone().unwrap_or_else(|| {
        let mut p = ckpt.as_os_str().to_owned();
        p.push(".bench.json");
        PathBuf::from(p)
    });
    rec.finish(
        &out,
        &run,
        vec![],
        &[&ckpt, &data],
        &[],
        serde_json::json!({
            "param_count": model.param_count(),
            "seconds_per_sample": per_sample,
            "mean": s.mean,
            "std": s.std,
        }),
    )
}
