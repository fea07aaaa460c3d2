//! Normalised RGB images and per-pixel depth maps.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// RGB image with channel values in `[0, 1]`, stored row-major with
/// interleaved channels (`(row * width + col) * 3 + channel`).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        let expected = height * width * 3;
        if pixels.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: pixels.len() });
        }
        if let Some(i) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation(alloc::format!(
                "pixel value {} at index {i} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self { height, width, pixels })
    }

    /// Image filled with one RGB colour.
    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        let pixels = (0..height * width).flat_map(|_| rgb).collect();
        Self::new(height, width, pixels)
    }

    /// Decodes 8-bit RGB samples (value / 255).
    pub fn from_rgb8(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(height, width, bytes.iter().map(|&b| f64::from(b) / 255.0).collect())
    }

    /// Quantises to 8-bit by round-half-up.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| quantize_u8(v)).collect()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Builds an image of the same shape from already clamped samples.
    pub(crate) fn with_pixels(&self, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), self.pixels.len());
        Self { height: self.height, width: self.width, pixels }
    }
}

/// `[0, 1]` → `0..=255`, round-half-up.
pub fn quantize_u8(v: f64) -> u8 {
    libm::floor(v.clamp(0.0, 1.0) * 255.0 + 0.5) as u8
}

/// Far and near ends of the fallback depth ramp, in metres.
pub const RAMP_TOP_METERS: f64 = 300.0;
pub const RAMP_BOTTOM_METERS: f64 = 5.0;

/// Per-pixel scene depth in metres with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    height: usize,
    width: usize,
    depth: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthMap {
    pub fn new(height: usize, width: usize, depth: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let expected = height * width;
        for len in [depth.len(), valid.len()] {
            if len != expected {
                return Err(Error::DimensionMismatch { expected, found: len });
            }
        }
        for (i, (&d, &ok)) in depth.iter().zip(&valid).enumerate() {
            if ok && !(d.is_finite() && d > 0.0) {
                return Err(Error::validation(alloc::format!("valid depth at index {i} must be positive, got {d}")));
            }
        }
        Ok(Self { height, width, depth, valid })
    }

    /// Vertical linear ramp from 300 m in the top row to 5 m in the bottom
    /// row: a stand-in for road-scene geometry when no depth is available.
    pub fn road_ramp(height: usize, width: usize) -> Self {
        let depth = (0..height)
            .flat_map(|r| {
                let t = if height > 1 { r as f64 / (height - 1) as f64 } else { 0.0 };
                let d = RAMP_TOP_METERS + (RAMP_BOTTOM_METERS - RAMP_TOP_METERS) * t;
                core::iter::repeat_n(d, width)
            })
            .collect();
        Self { height, width, depth, valid: vec![true; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    /// Depth per pixel with invalid entries replaced by the median of the
    /// valid ones. A map without any valid pixel falls back to the ramp.
    pub fn resolved(&self) -> Vec<f64> {
        let mut valid: Vec<f64> =
            self.depth.iter().zip(&self.valid).filter(|(_, &ok)| ok).map(|(&d, _)| d).collect();
        if valid.is_empty() {
            return Self::road_ramp(self.height, self.width).depth;
        }
        if valid.len() == self.depth.len() {
            return self.depth.clone();
        }
        valid.sort_by(f64::total_cmp);
        let n = valid.len();
        let median = if n % 2 == 1 { valid[n / 2] } else { 0.5 * (valid[n / 2 - 1] + valid[n / 2]) };
        self.depth.iter().zip(&self.valid).map(|(&d, &ok)| if ok { d } else { median }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize_u8(0.0), 0);
        assert_eq!(quantize_u8(1.0), 255);
        assert_eq!(quantize_u8(0.5), 128);
        assert_eq!(quantize_u8(127.5 / 255.0), 128);
        assert_eq!(quantize_u8(127.49 / 255.0), 127);
    }

    #[test]
    fn rgb8_roundtrip_is_exact() {
        let bytes: Vec<u8> = (0..=255u8).chain(0..=255).chain(0..=255).collect();
        let img = ImageBuffer::from_rgb8(16, 16, &bytes).unwrap();
        assert_eq!(img.to_rgb8(), bytes);
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(ImageBuffer::new(1, 1, alloc::vec![0.0, 1.2, 0.0]).is_err());
        assert!(ImageBuffer::new(1, 2, alloc::vec![0.0; 3]).is_err());
    }

    #[test]
    fn ramp_spans_far_to_near() {
        let d = DepthMap::road_ramp(3, 2);
        assert_eq!(d.depth(), &[300.0, 300.0, 152.5, 152.5, 5.0, 5.0]);
    }

    #[test]
    fn invalid_depth_filled_with_median() {
        let d = DepthMap::new(1, 4, alloc::vec![10.0, 0.0, 30.0, 20.0], alloc::vec![true, false, true, true]).unwrap();
        assert_eq!(d.resolved(), alloc::vec![10.0, 20.0, 30.0, 20.0]);
        let none = DepthMap::new(2, 1, alloc::vec![0.0, 0.0], alloc::vec![false, false]).unwrap();
        assert_eq!(none.resolved(), alloc::vec![300.0, 5.0]);
        assert!(DepthMap::new(1, 1, alloc::vec![-1.0], alloc::vec![true]).is_err());
    }
}
