//! Deterministic hand-crafted image encoder used in place of a neural
//! backbone so corruption → detection pipelines run end to end.

use alloc::string::String;
use alloc::vec::Vec;

use crate::embedding::EmbeddingVector;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Default grid: 4×4 cells, 51-dimensional output.
pub const DEFAULT_GRID: usize = 4;

/// Output length for a given grid size.
pub const fn toy_dim(grid: usize) -> usize {
    3 * grid * grid + 3
}

/// Half-open bounds of cell `i` when `len` is split into `parts`; the last
/// cell absorbs the remainder.
fn cell_bounds(len: usize, parts: usize, i: usize) -> (usize, usize) {
    let base = len / parts;
    let start = i * base;
    let end = if i + 1 == parts { len } else { start + base };
    (start, end)
}

/// Encodes `img` as per-cell RGB means over a `grid × grid` partition
/// (cells in row-major order, channels interleaved) followed by the three
/// global per-channel population standard deviations.
pub fn toy_encode(id: impl Into<String>, img: &ImageBuffer, grid: usize) -> Result<EmbeddingVector> {
    let (h, w) = (img.height(), img.width());
    if img.is_empty() {
        return Err(Error::validation("cannot encode an empty image"));
    }
    if grid == 0 || grid > h || grid > w {
        return Err(Error::validation(alloc::format!("grid {grid} does not fit a {h}x{w} image")));
    }
    let px = img.pixels();
    let mut out = Vec::with_capacity(toy_dim(grid));
    for gr in 0..grid {
        let (r0, r1) = cell_bounds(h, grid, gr);
        for gc in 0..grid {
            let (c0, c1) = cell_bounds(w, grid, gc);
            let mut sum = [0.0f64; 3];
            for r in r0..r1 {
                for c in c0..c1 {
                    let i = (r * w + c) * 3;
                    for ch in 0..3 {
                        sum[ch] += px[i + ch];
                    }
                }
            }
            let n = ((r1 - r0) * (c1 - c0)) as f64;
            out.extend(sum.iter().map(|s| s / n));
        }
    }
    let n = (h * w) as f64;
    for ch in 0..3 {
        let mean = px.iter().skip(ch).step_by(3).sum::<f64>() / n;
        let var = px.iter().skip(ch).step_by(3).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        out.push(libm::sqrt(var));
    }
    EmbeddingVector::new(id, out)
}
