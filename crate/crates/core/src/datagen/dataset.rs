//! `FDS1` dataset files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FieldMaps, FractalParams, GenConfig, Grid, RelPermCoeffs, Sample};
use crate::container::{self, ArrayEntry};
use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"FDS1";
const FORMAT_VERSION: u32 = 1;
const ARRAYS: [&str; 5] = ["kh", "aniso", "phi", "sg", "dp"];

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub grid: Grid,
    pub seed: u64,
    pub config: GenConfig,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(train, test)` by the fixed split convention.
    pub fn split(&self) -> (&[Sample], &[Sample]) {
        self.samples.split_at(super::train_count(self.samples.len()))
    }
}

#[derive(Serialize, Deserialize)]
struct SampleHeader {
    index: usize,
    q: f64,
    coeffs: RelPermCoeffs,
    fractal: FractalParams,
    arrays: Vec<ArrayEntry>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    crate_version: String,
    seed: u64,
    grid: Grid,
    generator: GenConfig,
    samples: Vec<SampleHeader>,
}

fn sample_arrays(s: &Sample) -> [&[f32]; 5] {
    [&s.fields.kh, &s.fields.aniso, &s.fields.phi, &s.sg, &s.dp]
}

pub fn write_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let (nr, nz, nt) = (ds.grid.nr, ds.grid.nz, ds.grid.steps());
    let field = [nr, nz];
    let series = [nt, nr, nz];
    let shapes: [&[usize]; 5] = [&field, &field, &field, &series, &series];
    for s in &ds.samples {
        for (name, (a, shape)) in ARRAYS.iter().zip(sample_arrays(s).iter().zip(shapes)) {
            if a.len() != shape.iter().product::<usize>() {
                return Err(Error::invalid_shape(
                    "write_dataset",
                    format!("sample {} array {name} has {} values, grid needs {shape:?}", s.index, a.len()),
                ));
            }
        }
    }
    let all = container::layout(
        ds.samples
            .iter()
            .flat_map(|s| ARRAYS.iter().zip(shapes).map(move |(n, sh)| (format!("{}/{n}", s.index), sh))),
    );
    let samples = ds
        .samples
        .iter()
        .zip(all.chunks(ARRAYS.len()))
        .map(|(s, entries)| SampleHeader {
            index: s.index,
            q: s.q,
            coeffs: s.coeffs,
            fractal: s.fractal,
            arrays: entries.to_vec(),
        })
        .collect();
    let header = Header {
        format_version: FORMAT_VERSION,
        crate_version: crate::VERSION.into(),
        seed: ds.seed,
        grid: ds.grid.clone(),
        generator: ds.config.clone(),
        samples,
    };
    container::write(
        path.as_ref(),
        DATASET_MAGIC,
        &header,
        ds.samples.iter().flat_map(sample_arrays),
    )
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = container::read(path, DATASET_MAGIC)?;
    let header: Header = file.parse_header()?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: 12,
            detail: format!("dataset version {} unsupported", header.format_version),
        });
    }
    let entries: Vec<ArrayEntry> = header.samples.iter().flat_map(|s| s.arrays.clone()).collect();
    file.check_size(&entries)?;
    let samples = header
        .samples
        .into_iter()
        .map(|h| {
            if h.arrays.len() != ARRAYS.len() {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    offset: 12,
                    detail: format!("sample {} lists {} arrays", h.index, h.arrays.len()),
                });
            }
            let mut a = h.arrays.iter().map(|e| file.array(e)).collect::<Result<Vec<_>>>()?;
            let dp = a.pop().unwrap();
            let sg = a.pop().unwrap();
            let phi = a.pop().unwrap();
            let aniso = a.pop().unwrap();
            let kh = a.pop().unwrap();
            Ok(Sample {
                index: h.index,
                q: h.q,
                coeffs: h.coeffs,
                fields: FieldMaps { kh, aniso, phi },
                sg,
                dp,
                fractal: h.fractal,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        grid: header.grid,
        seed: header.seed,
        config: header.generator,
        samples,
    })
}
