//! Shared binary layout of checkpoint and dataset files: a 4-byte magic, the
//! header length as a little-endian `u64`, a JSON header, then raw
//! little-endian `f32` arrays addressed by byte offsets relative to the end
//! of the header.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub offset: u64,
}

impl ArrayEntry {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Assigns consecutive offsets to arrays in the given order.
pub(crate) fn layout<'a>(arrays: impl IntoIterator<Item = (String, &'a [usize])>) -> Vec<ArrayEntry> {
    let mut offset = 0u64;
    arrays
        .into_iter()
        .map(|(name, shape)| {
            let e = ArrayEntry {
                name,
                shape: shape.to_vec(),
                dtype: "f32".into(),
                offset,
            };
            offset += 4 * e.numel() as u64;
            e
        })
        .collect()
}

pub(crate) fn write<'a>(
    path: &Path,
    magic: &[u8; 4],
    header: &impl Serialize,
    arrays: impl IntoIterator<Item = &'a [f32]>,
) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(magic)?;
    put(&(json.len() as u64).to_le_bytes())?;
    put(&json)?;
    for a in arrays {
        let mut buf = Vec::with_capacity(a.len() * 4);
        for v in a {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        put(&buf)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A file read into memory with its header split off.
pub(crate) struct Container {
    pub header: Vec<u8>,
    body: Vec<u8>,
    body_start: u64,
    path: std::path::PathBuf,
}

pub(crate) fn read(path: &Path, magic: &[u8; 4]) -> Result<Container> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let fail = |offset: u64, detail: String| Error::Format {
        path: path.to_path_buf(),
        offset,
        detail,
    };
    if bytes.len() < 12 {
        return Err(fail(0, format!("file is only {} bytes", bytes.len())));
    }
    if &bytes[..4] != magic {
        return Err(fail(
            0,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[..4]),
                String::from_utf8_lossy(magic)
            ),
        ));
    }
    let len = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let body_start = 12u64.saturating_add(len);
    if body_start > bytes.len() as u64 {
        return Err(fail(4, format!("header length {len} exceeds file size")));
    }
    let body = bytes.split_off(body_start as usize);
    let header = bytes.split_off(12);
    Ok(Container {
        header,
        body,
        body_start,
        path: path.to_path_buf(),
    })
}

impl Container {
    pub fn parse_header<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        serde_json::from_slice(&self.header).map_err(|e| Error::Format {
            path: self.path.clone(),
            offset: 12,
            detail: format!("header JSON: {e}"),
        })
    }

    pub fn array(&self, entry: &ArrayEntry) -> Result<Vec<f32>> {
        let fail = |detail: String| Error::Format {
            path: self.path.clone(),
            offset: self.body_start + entry.offset,
            detail,
        };
        if entry.dtype != "f32" {
            return Err(fail(format!("array {} has dtype {}", entry.name, entry.dtype)));
        }
        let start = entry.offset as usize;
        let end = start + 4 * entry.numel();
        if end > self.body.len() {
            return Err(fail(format!(
                "array {} truncated: needs bytes {start}..{end}, body has {}",
                entry.name,
                self.body.len()
            )));
        }
        Ok(self.body[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Total bytes the manifest claims, checked against the body size.
    pub fn check_size(&self, entries: &[ArrayEntry]) -> Result<()> {
        let need = entries
            .iter()
            .map(|e| e.offset + 4 * e.numel() as u64)
            .max()
            .unwrap_or(0);
        if need != self.body.len() as u64 {
            return Err(Error::Format {
                path: self.path.clone(),
                offset: self.body_start,
                detail: format!("manifest covers {need} bytes, body has {}", self.body.len()),
            });
        }
        Ok(())
    }
}
