use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use ffino::{Error, Result};

#[derive(Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    let mut f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    let sha256 = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256,
    })
}

pub fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Record of one CLI run, written next to its outputs.
#[derive(Serialize)]
pub struct Manifest {
    pub subcommand: String,
    pub version: String,
    pub threads: usize,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_seconds: f64,
    pub timings: serde_json::Value,
}

pub struct Recorder {
    subcommand: String,
    start: Instant,
}

impl Recorder {
    pub fn start(subcommand: &str) -> Self {
        Recorder {
            subcommand: subcommand.into(),
            start: Instant::now(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn finish(
        self,
        path: &Path,
        config: &impl Serialize,
        seeds: Vec<u64>,
        inputs: &[&Path],
        outputs: &[&Path],
        timings: serde_json::Value,
    ) -> Result<()> {
        let m = Manifest {
            subcommand: self.subcommand,
            version: ffino::VERSION.into(),
            threads: rayon::current_num_threads(),
            config: serde_json::to_value(config)?,
            seeds,
            inputs: inputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|p| digest(p)).collect::<Result<_>>()?,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            timings,
        };
        let text = serde_json::to_string_pretty(&m)?;
        std::fs::write(path, text).map_err(|e| io_err(path, e))
    }
}

/// `<file>.manifest.json` beside a single output file.
pub fn beside(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
