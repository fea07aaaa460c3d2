//! PNG input and output for images, depth maps, uncertainty maps and
//! pixel ground truth.

use std::path::{Path, PathBuf};

use cornercase_core::metrics::PixelScoreMap;
use cornercase_core::uncertainty::UncertaintyMap;
use cornercase_core::{DepthMap, ImageBuffer};
use image::{GrayImage, ImageBuffer as RawImage, Luma, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{read_file, write_file, Error, Result};

fn open(path: &Path) -> Result<image::DynamicImage> {
    let bytes = read_file(path)?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|e| Error::format(path, e.to_string()))
}

fn save(path: &Path, img: impl FnOnce(&mut std::io::Cursor<Vec<u8>>) -> image::ImageResult<()>) -> Result<()> {
    let mut cursor = std::io::Cursor::new(Vec::new());
    img(&mut cursor).map_err(|e| Error::format(path, e.to_string()))?;
    write_file(path, cursor.get_ref())
}

/// 8-bit RGB PNG (other colour types are converted).
pub fn read_rgb_png(path: &Path) -> Result<ImageBuffer> {
    let rgb = open(path)?.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(ImageBuffer::from_rgb8(h as usize, w as usize, rgb.as_raw())?)
}

/// Writes an 8-bit RGB PNG, quantising by round-half-up.
pub fn write_rgb_png(path: &Path, img: &ImageBuffer) -> Result<()> {
    let raw = RgbImage::from_raw(img.width() as u32, img.height() as u32, img.to_rgb8())
        .expect("buffer length matches dimensions");
    save(path, |c| raw.write_to(c, image::ImageFormat::Png))
}

fn read_gray16(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let img = open(path)?;
    if !matches!(img.color(), image::ColorType::L16 | image::ColorType::L8) {
        return Err(Error::format(path, format!("expected a single-channel PNG, found {:?}", img.color())));
    }
    let g = img.to_luma16();
    let (w, h) = g.dimensions();
    Ok((h as usize, w as usize, g.into_raw()))
}

fn write_gray16(path: &Path, height: usize, width: usize, data: Vec<u16>) -> Result<()> {
    let raw: RawImage<Luma<u16>, Vec<u16>> =
        RawImage::from_raw(width as u32, height as u32, data).expect("buffer length matches dimensions");
    save(path, |c| raw.write_to(c, image::ImageFormat::Png))
}

/// Depth sidecar: `meters = value × scale`; value 0 marks invalid pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub scale: f64,
}

/// `foo.png` → `foo.json`.
pub fn depth_sidecar_path(png: &Path) -> PathBuf {
    png.with_extension("json")
}

pub fn read_depth_png(path: &Path) -> Result<DepthMap> {
    let side_path = depth_sidecar_path(path);
    let sidecar: DepthSidecar = serde_json::from_slice(&read_file(&side_path)?)
        .map_err(|e| Error::format(&side_path, e.to_string()))?;
    if !(sidecar.scale.is_finite() && sidecar.scale > 0.0) {
        return Err(Error::format(&side_path, "depth scale must be positive"));
    }
    let (h, w, raw) = read_gray16(path)?;
    let depth = raw.iter().map(|&v| f64::from(v) * sidecar.scale).collect();
    let valid = raw.iter().map(|&v| v > 0).collect();
    Ok(DepthMap::new(h, w, depth, valid)?)
}

/// Writes a 16-bit depth PNG and its sidecar. Invalid pixels and depths
/// beyond the representable range are stored as 0 and 65535.
pub fn write_depth_png(path: &Path, depth: &DepthMap, scale: f64) -> Result<()> {
    let raw = depth
        .depth()
        .iter()
        .zip(depth.valid())
        .map(|(&d, &ok)| if ok { (d / scale).round().clamp(1.0, 65535.0) as u16 } else { 0 })
        .collect();
    write_gray16(path, depth.height(), depth.width(), raw)?;
    let side = serde_json::to_vec(&DepthSidecar { scale }).expect("plain struct");
    write_file(&depth_sidecar_path(path), &side)
}

/// 16-bit single-channel map decoded as `value / 65535`.
pub fn read_uncertainty_png(path: &Path) -> Result<UncertaintyMap> {
    let (h, w, raw) = read_gray16(path)?;
    Ok(UncertaintyMap::from_u16(h, w, &raw)?)
}

pub fn write_uncertainty_png(path: &Path, map: &UncertaintyMap) -> Result<()> {
    let raw = map.values().iter().map(|&v| (v * 65535.0).round() as u16).collect();
    write_gray16(path, map.height(), map.width(), raw)
}

/// 8-bit ground truth: 0 background, 255 anomaly, anything else invalid.
/// Returns `(height, width, anomaly, valid)`.
pub fn read_ground_truth_png(path: &Path) -> Result<(usize, usize, Vec<bool>, Vec<bool>)> {
    let img = open(path)?;
    let g: GrayImage = img.to_luma8();
    let (w, h) = g.dimensions();
    let raw = g.into_raw();
    let anomaly = raw.iter().map(|&v| v == 255).collect();
    let valid = raw.iter().map(|&v| v == 0 || v == 255).collect();
    Ok((h as usize, w as usize, anomaly, valid))
}

pub fn write_ground_truth_png(path: &Path, height: usize, width: usize, labels: &[Option<bool>]) -> Result<()> {
    let raw: Vec<u8> = labels
        .iter()
        .map(|l| match l {
            Some(true) => 255,
            Some(false) => 0,
            None => 128,
        })
        .collect();
    let img = GrayImage::from_raw(width as u32, height as u32, raw).expect("buffer length matches dimensions");
    save(path, |c| img.write_to(c, image::ImageFormat::Png))
}

/// Pairs a 16-bit anomaly-score PNG with an 8-bit ground-truth PNG.
pub fn read_pixel_score_map(scores: &Path, ground_truth: &Path) -> Result<PixelScoreMap> {
    let map = read_uncertainty_png(scores)?;
    let (h, w, gt, valid) = read_ground_truth_png(ground_truth)?;
    if (h, w) != (map.height(), map.width()) {
        return Err(Error::Data(format!(
            "score map is {}x{} but ground truth is {h}x{w}",
            map.height(),
            map.width()
        )));
    }
    Ok(PixelScoreMap::new(h, w, map.values().to_vec(), gt, valid)?)
}

/// PNG files in `dir`, sorted by file name.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
