//! On-disk corruption sweeps: `<out>/<kind>/<severity>/<file>` plus a
//! `manifest.json` listing every (source, spec, output) triple.

use std::path::{Path, PathBuf};

use cornercase_core::corruption::{severity_sweep, CorruptionKind, CorruptionSpec, SeverityGrid};
use cornercase_core::rng::derive_seed;
use cornercase_core::DepthMap;
use serde::{Deserialize, Serialize};

use crate::error::{write_file, Error, Result};
use crate::image_io::{file_name, list_pngs, read_depth_png, read_rgb_png, write_rgb_png};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const RAMP_SOURCE: &str = "ramp_300m_to_5m";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecRecord {
    pub kind: String,
    pub severity: f64,
    pub seed: u64,
    pub atmospheric_light: f64,
}

impl From<&CorruptionSpec> for SpecRecord {
    fn from(s: &CorruptionSpec) -> Self {
        Self { kind: s.kind.to_string(), severity: s.severity, seed: s.seed, atmospheric_light: s.atmospheric_light }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub source: PathBuf,
    pub output: PathBuf,
    pub spec: SpecRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub kind: String,
    pub base_seed: u64,
    pub atmospheric_light: f64,
    /// Where fog depth came from: a depth directory or the vertical ramp.
    /// Absent for corruptions that ignore depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_source: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

/// Per-image seed within one sweep step.
pub fn image_seed(spec: &CorruptionSpec, index: usize) -> u64 {
    derive_seed(spec.seed, index as u64)
}

pub struct SweepRequest<'a> {
    pub input: &'a Path,
    pub depth: Option<&'a Path>,
    pub kind: CorruptionKind,
    pub grid: SeverityGrid,
    pub base_seed: u64,
    pub atmospheric_light: f64,
    pub out: &'a Path,
}

fn severity_dir(v: f64) -> String {
    v.to_string()
}

/// Writes every corrupted image and the manifest; returns the manifest.
pub fn run_sweep(req: &SweepRequest<'_>) -> Result<SweepManifest> {
    let specs = severity_sweep(req.kind, &req.grid, req.base_seed, req.atmospheric_light).map_err(|e| Error::Config(e.to_string()))?;
    let sources = list_pngs(req.input)?;
    if sources.is_empty() {
        return Err(Error::Data(format!("no PNG images in {}", req.input.display())));
    }
    let fog = req.kind == CorruptionKind::Fog;
    let depths: Option<Vec<DepthMap>> = match req.depth {
        Some(dir) if fog => Some(sources.iter().map(|s| read_depth_png(&dir.join(file_name(s)))).collect::<Result<_>>()?),
        _ => None,
    };
    let images = sources.iter().map(|s| read_rgb_png(s)).collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    for spec in &specs {
        let dir = req.out.join(req.kind.as_str()).join(severity_dir(spec.severity));
        for (j, (src, img)) in sources.iter().zip(&images).enumerate() {
            let per_image = CorruptionSpec { seed: image_seed(spec, j), ..*spec };
            let out = per_image.apply(img, depths.as_ref().map(|d| &d[j]))?;
            let path = dir.join(file_name(src));
            write_rgb_png(&path, &out)?;
            entries.push(ManifestEntry { source: src.clone(), output: path, spec: (&per_image).into() });
        }
    }
    let depth_source = fog.then(|| match req.depth {
        Some(d) => d.display().to_string(),
        None => RAMP_SOURCE.to_string(),
    });
    let manifest = SweepManifest {
        kind: req.kind.to_string(),
        base_seed: req.base_seed,
        atmospheric_light: req.atmospheric_light,
        depth_source,
        entries,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("plain struct");
    write_file(&req.out.join(req.kind.as_str()).join(MANIFEST_NAME), text.as_bytes())?;
    Ok(manifest)
}
