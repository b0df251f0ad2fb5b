use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FfinoModel, ModelConfig};
use crate::container::{self, ArrayEntry};
use crate::error::{Error, Result};
use crate::layers::Module;
use crate::tensor::Real;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FCK1";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    crate_version: String,
    config: ModelConfig,
    tensors: Vec<ArrayEntry>,
}

/// Writes every parameter as little-endian `f32`, in enumeration order.
pub fn save_checkpoint<F: Real>(model: &FfinoModel<F>, path: impl AsRef<Path>) -> Result<()> {
    let params = model.params();
    let data: Vec<Vec<f32>> = params
        .iter()
        .map(|p| p.tensor().data().iter().map(|v| v.as_f64() as f32).collect())
        .collect();
    let header = Header {
        format_version: FORMAT_VERSION,
        crate_version: crate::VERSION.into(),
        config: model.config().clone(),
        tensors: container::layout(params.iter().map(|p| (p.name().to_string(), p.shape()))),
    };
    container::write(path.as_ref(), CHECKPOINT_MAGIC, &header, data.iter().map(Vec::as_slice))
}

pub fn load_checkpoint<F: Real>(path: impl AsRef<Path>) -> Result<FfinoModel<F>> {
    let path = path.as_ref();
    let file = container::read(path, CHECKPOINT_MAGIC)?;
    let header: Header = file.parse_header()?;
    let fail = |detail: String| Error::Format {
        path: path.to_path_buf(),
        offset: 12,
        detail,
    };
    if header.format_version != FORMAT_VERSION {
        return Err(fail(format!(
            "checkpoint version {} unsupported (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    file.check_size(&header.tensors)?;
    let mut model = FfinoModel::<F>::new(header.config, 0)?;
    let mut params = model.params_mut();
    if params.len() != header.tensors.len() {
        return Err(fail(format!(
            "{} tensors stored, configuration has {}",
            header.tensors.len(),
            params.len()
        )));
    }
    for (p, e) in params.iter_mut().zip(&header.tensors) {
        if p.name() != e.name || p.shape() != e.shape.as_slice() {
            return Err(fail(format!(
                "tensor {} {:?} does not match parameter {} {:?}",
                e.name,
                e.shape,
                p.name(),
                p.shape()
            )));
        }
        let values = file.array(e)?;
        p.set(values.into_iter().map(|v| F::of(v as f64)).collect())?;
    }
    Ok(model)
}
