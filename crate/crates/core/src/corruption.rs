//! Co-variate corruptions: depth-aware fog, Gaussian sensor noise and
//! white-pixel boxes, plus severity sweeps over them.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::{DepthMap, ImageBuffer};
use crate::rng;

/// Default atmospheric light (near-white).
pub const DEFAULT_ATMOSPHERIC_LIGHT: f64 = 0.92;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorruptionKind {
    Fog,
    GaussianNoise,
    WhiteBox,
}

impl CorruptionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorruptionKind::Fog => "fog",
            CorruptionKind::GaussianNoise => "gaussian_noise",
            CorruptionKind::WhiteBox => "white_box",
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fog" => Ok(CorruptionKind::Fog),
            "gaussian_noise" | "noise" => Ok(CorruptionKind::GaussianNoise),
            "white_box" | "whitebox" => Ok(CorruptionKind::WhiteBox),
            _ => Err(Error::validation(alloc::format!("unknown corruption kind {s:?}"))),
        }
    }
}

/// One corruption setting. `severity` is β (per metre) for fog, σ for
/// noise and the covered area fraction for white boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub severity: f64,
    pub seed: u64,
    /// Only used by fog.
    pub atmospheric_light: f64,
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, severity: f64, seed: u64) -> Result<Self> {
        let spec = Self { kind, severity, seed, atmospheric_light: DEFAULT_ATMOSPHERIC_LIGHT };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.severity.is_finite() && self.severity >= 0.0) {
            return Err(Error::validation(alloc::format!("severity {} must be finite and non-negative", self.severity)));
        }
        if self.kind == CorruptionKind::WhiteBox && self.severity > 1.0 {
            return Err(Error::validation("white-box area fraction must not exceed 1"));
        }
        if !(0.0..=1.0).contains(&self.atmospheric_light) {
            return Err(Error::validation("atmospheric light must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Applies the corruption. Fog without a depth map uses
    /// [`DepthMap::road_ramp`].
    pub fn apply(&self, img: &ImageBuffer, depth: Option<&DepthMap>) -> Result<ImageBuffer> {
        self.validate()?;
        match self.kind {
            CorruptionKind::Fog => match depth {
                Some(d) => apply_fog(img, d, self.severity, self.atmospheric_light),
                None => apply_fog(img, &DepthMap::road_ramp(img.height(), img.width()), self.severity, self.atmospheric_light),
            },
            CorruptionKind::GaussianNoise => apply_gaussian_noise(img, self.severity, self.seed),
            CorruptionKind::WhiteBox => apply_white_box(img, self.severity, self.seed),
        }
    }
}

/// Applies corruptions in list order. Corruptions do not commute in
/// general, so order is part of the pipeline's identity.
pub fn apply_pipeline(img: &ImageBuffer, steps: &[CorruptionSpec], depth: Option<&DepthMap>) -> Result<ImageBuffer> {
    let mut out = img.clone();
    for step in steps {
        out = step.apply(&out, depth)?;
    }
    Ok(out)
}

/// Koschmieder fog: `I = J·t + A·(1 − t)` with `t = exp(−β·d)`.
/// Invalid depths take the median of the valid ones.
pub fn apply_fog(img: &ImageBuffer, depth: &DepthMap, beta: f64, atmospheric_light: f64) -> Result<ImageBuffer> {
    if depth.height() != img.height() || depth.width() != img.width() {
        return Err(Error::validation(alloc::format!(
            "depth map is {}x{} but image is {}x{}",
            depth.height(),
            depth.width(),
            img.height(),
            img.width()
        )));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::validation("fog beta must be finite and non-negative"));
    }
    if !(0.0..=1.0).contains(&atmospheric_light) {
        return Err(Error::validation("atmospheric light must lie in [0, 1]"));
    }
    let depths = depth.resolved();
    let mut out = Vec::with_capacity(img.pixels().len());
    for (rgb, &d) in img.pixels().chunks_exact(3).zip(&depths) {
        let t = libm::exp(-beta * d);
        out.extend(rgb.iter().map(|&j| (j * t + atmospheric_light * (1.0 - t)).clamp(0.0, 1.0)));
    }
    Ok(img.with_pixels(out))
}

/// Adds zero-mean Gaussian noise with standard deviation `sigma` to every
/// channel sample and clamps to `[0, 1]`.
pub fn apply_gaussian_noise(img: &ImageBuffer, sigma: f64, seed: u64) -> Result<ImageBuffer> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::validation("noise sigma must be finite and non-negative"));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| Error::validation("invalid noise sigma"))?;
    let mut r = rng::seeded(seed);
    let out = img.pixels().iter().map(|&v| (v + normal.sample(&mut r)).clamp(0.0, 1.0)).collect();
    Ok(img.with_pixels(out))
}

/// Axis-aligned pixel rectangle, half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

/// Box covering about `area_fraction` of a `height × width` image: a
/// square of side `round(√(f·H·W))`, with each side clamped to the image
/// (a clamped height is compensated in width to keep the area). Placement
/// is uniform from the seeded generator. `None` when the box is empty.
pub fn white_box_rect(height: usize, width: usize, area_fraction: f64, seed: u64) -> Result<Option<Rect>> {
    if !(0.0..=1.0).contains(&area_fraction) {
        return Err(Error::validation(alloc::format!("area fraction {area_fraction} outside [0, 1]")));
    }
    let area = area_fraction * (height * width) as f64;
    let side = libm::round(libm::sqrt(area)) as usize;
    if side == 0 || height == 0 || width == 0 {
        return Ok(None);
    }
    let bh = side.min(height);
    let bw = if side > height { (libm::round(area / height as f64) as usize).min(width) } else { side.min(width) };
    let mut r = rng::seeded(seed);
    let top = r.random_range(0..=height - bh);
    let left = r.random_range(0..=width - bw);
    Ok(Some(Rect { top, left, height: bh, width: bw }))
}

/// Sets a randomly placed box covering `area_fraction` of the image to
/// white.
pub fn apply_white_box(img: &ImageBuffer, area_fraction: f64, seed: u64) -> Result<ImageBuffer> {
    let Some(rect) = white_box_rect(img.height(), img.width(), area_fraction, seed)? else {
        return Ok(img.clone());
    };
    let w = img.width();
    let mut out = img.pixels().to_vec();
    for row in rect.top..rect.top + rect.height {
        let start = (row * w + rect.left) * 3;
        out[start..start + rect.width * 3].fill(1.0);
    }
    Ok(img.with_pixels(out))
}

/// Named severity grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// β ∈ {0.005, 0.01, 0.02}.
    FogPaper,
    /// 50 equally spaced σ in [0.001, 0.01].
    NoisePaper,
    /// 20 equally spaced area fractions in [0.007, 0.119].
    WhiteboxPaper,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::FogPaper => "fog-paper",
            Preset::NoisePaper => "noise-paper",
            Preset::WhiteboxPaper => "whitebox-paper",
        }
    }

    pub fn kind(self) -> CorruptionKind {
        match self {
            Preset::FogPaper => CorruptionKind::Fog,
            Preset::NoisePaper => CorruptionKind::GaussianNoise,
            Preset::WhiteboxPaper => CorruptionKind::WhiteBox,
        }
    }

    pub fn severities(self) -> Vec<f64> {
        match self {
            Preset::FogPaper => alloc::vec![0.005, 0.01, 0.02],
            Preset::NoisePaper => linspace(0.001, 0.01, 50),
            Preset::WhiteboxPaper => linspace(0.007, 0.119, 20),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Preset::FogPaper, Preset::NoisePaper, Preset::WhiteboxPaper]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::validation(alloc::format!("unknown severity preset {s:?}")))
    }
}

/// `n` equally spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![start],
        _ => (0..n)
            .map(|i| if i + 1 == n { end } else { start + (end - start) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeverityGrid {
    Explicit(Vec<f64>),
    Preset(Preset),
}

/// One spec per severity; the i-th spec gets seed `base_seed + i`.
pub fn severity_sweep(
    kind: CorruptionKind,
    grid: &SeverityGrid,
    base_seed: u64,
    atmospheric_light: f64,
) -> Result<Vec<CorruptionSpec>> {
    let severities = match grid {
        SeverityGrid::Explicit(v) => v.clone(),
        SeverityGrid::Preset(p) => {
            if p.kind() != kind {
                return Err(Error::validation(alloc::format!("preset {} is not a {kind} grid", p.name())));
            }
            p.severities()
        }
    };
    if severities.is_empty() {
        return Err(Error::validation("severity grid is empty"));
    }
    if severities.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("severity grid must be strictly increasing"));
    }
    severities
        .iter()
        .enumerate()
        .map(|(i, &severity)| {
            let spec = CorruptionSpec { kind, severity, seed: base_seed.wrapping_add(i as u64), atmospheric_light };
            spec.validate().map(|_| spec)
        })
        .collect()
}
