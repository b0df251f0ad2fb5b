//! `ffino` command line: data generation, curve fitting, training,
//! evaluation, prediction and inference benchmarks.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ffino::Error;

#[derive(Parser)]
#[command(name = "ffino", version, about = "FFINO neural operator pipeline")]
struct Cli {
    /// Worker threads; 1 gives the fully deterministic mode.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    GenData(commands::GenDataArgs),
    /// Fit relative permeability coefficients to curve points.
    FitRelperm(commands::FitArgs),
    /// Train a model on one target.
    Train(commands::TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(commands::EvalArgs),
    /// Reference / prediction / error data for one sample.
    Predict(commands::PredictArgs),
    /// Time inference.
    Bench(commands::BenchArgs),
}

/// Stable exit codes: 2 configuration, 3 I/O or format, 4 numerical.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Format { .. } | Error::Json(_) => 3,
        Error::NonFinite(_) | Error::FitNotConverged { .. } | Error::DegenerateReference(_) | Error::Backward(_) => 4,
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::InvalidCoefficients(_)
        | Error::ShapeMismatch { .. }
        | Error::InvalidShape { .. } => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::FitRelperm(a) => commands::fit_relperm(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Predict(a) => commands::predict(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub(crate) fn require(v: Option<PathBuf>, flag: &str) -> ffino::Result<PathBuf> {
    v.ok_or_else(|| Error::Config(format!("{flag} is required (flag or config file)")))
}
