//! PCA coordinate export as JSON lines: `{"id", "dataset", "coords"}`.

use std::fmt::Write as _;
use std::path::Path;

use cornercase_core::stats::{pca_transform, PcaModel};
use cornercase_core::EmbeddingSet;
use serde::{Deserialize, Serialize};

use crate::error::{write_file, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub id: String,
    pub dataset: String,
    pub coords: Vec<f64>,
}

pub fn project(model: &PcaModel, dataset: &str, set: &EmbeddingSet) -> Result<Vec<PcaPoint>> {
    set.iter()
        .map(|z| Ok(PcaPoint { id: z.id.clone(), dataset: dataset.to_string(), coords: pca_transform(model, z)?.into_values() }))
        .collect()
}

pub fn encode_points(points: &[PcaPoint]) -> String {
    let mut out = String::new();
    for p in points {
        writeln!(out, "{}", serde_json::to_string(p).expect("plain struct")).unwrap();
    }
    out
}

pub fn write_points(path: &Path, points: &[PcaPoint]) -> Result<()> {
    write_file(path, encode_points(points).as_bytes())
}
