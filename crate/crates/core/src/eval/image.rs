//! Binary PPM (P6) heatmaps.

use std::path::Path;

use crate::error::{Error, Result};

/// Anchor colours of the 256-entry colormap (dark purple, blue, teal, green,
/// yellow); entries are linear interpolations between consecutive anchors.
pub const COLORMAP_ANCHORS: [[u8; 3]; 5] = [
    [0x44, 0x01, 0x54],
    [0x3b, 0x52, 0x8b],
    [0x21, 0x91, 0x8c],
    [0x5e, 0xc9, 0x62],
    [0xfd, 0xe7, 0x25],
];

pub fn colormap() -> [[u8; 3]; 256] {
    let mut map = [[0u8; 3]; 256];
    let segments = (COLORMAP_ANCHORS.len() - 1) as f64;
    for (i, entry) in map.iter_mut().enumerate() {
        let x = i as f64 / 255.0 * segments;
        let s = (x.floor() as usize).min(COLORMAP_ANCHORS.len() - 2);
        let f = x - s as f64;
        for c in 0..3 {
            let (a, b) = (COLORMAP_ANCHORS[s][c] as f64, COLORMAP_ANCHORS[s + 1][c] as f64);
            entry[c] = (a + (b - a) * f).round() as u8;
        }
    }
    map
}

/// An RGB canvas assembled from scalar panels.
pub struct Canvas {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: usize, height: usize) -> Self {
        Canvas {
            width,
            height,
            pixels: vec![0; width * height * 3],
        }
    }

    /// Draws a `[nr, nz]` field with `r` running left to right and `z`
    /// downwards, mapping `[lo, hi]` onto the colormap.
    pub fn panel(&mut self, x0: usize, y0: usize, field: &[f64], nr: usize, nz: usize, lo: f64, hi: f64) {
        let map = colormap();
        let span = if hi > lo { hi - lo } else { 1.0 };
        for i in 0..nr {
            for j in 0..nz {
                let (x, y) = (x0 + i, y0 + j);
                if x >= self.width || y >= self.height {
                    continue;
                }
                let t = ((field[i * nz + j] - lo) / span).clamp(0.0, 1.0);
                let c = map[(t * 255.0).round() as usize];
                let p = (y * self.width + x) * 3;
                self.pixels[p..p + 3].copy_from_slice(&c);
            }
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        bytes.extend_from_slice(&self.pixels);
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}
