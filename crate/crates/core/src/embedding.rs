//! Encoder feature maps, pooled embedding vectors and embedding sets.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Pre-pooling encoder output of shape `channels × height × width`,
/// stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
    /// Free-form name of the encoder layer that produced the map.
    pub layer: Option<String>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::validation("feature map dimensions must be positive"));
        }
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(alloc::format!("non-finite feature value at index {i}")));
        }
        Ok(Self { channels, height, width, data, layer: None })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The `height × width` plane of one channel.
    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }
}

/// Pooled latent vector for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub id: String,
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("embedding must have at least one component"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(alloc::format!("non-finite embedding value at index {i}")));
        }
        Ok(Self { id: id.into(), values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Ordered collection of embeddings sharing one dimensionality, with
/// unique ids.
///
/// An empty set (dimension 0) is representable so that loading is total;
/// every fitting routine rejects it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingSet {
    dim: usize,
    records: Vec<EmbeddingVector>,
}

impl EmbeddingSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a set, inferring the dimension from the first record.
    pub fn new(records: Vec<EmbeddingVector>) -> Result<Self> {
        let dim = records.first().map_or(0, EmbeddingVector::dim);
        let mut seen = BTreeSet::new();
        for r in &records {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.dim() });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::validation(alloc::format!("duplicate embedding id {:?}", r.id)));
            }
        }
        Ok(Self { dim, records })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingVector] {
        &self.records
    }

    pub fn iter(&self) -> impl Iterator<Item = &EmbeddingVector> {
        self.records.iter()
    }

    /// Rejects sets unusable for fitting: fewer than `min` records.
    pub fn require_records(&self, min: usize) -> Result<()> {
        if self.records.len() < min.max(1) {
            return Err(Error::InsufficientData { needed: min.max(1), found: self.records.len() });
        }
        Ok(())
    }
}

/// Spatial mean pooling: one value per channel, the average activation
/// over the `height × width` plane. The result is tagged with `id`.
pub fn pool_spatial_mean(id: impl Into<String>, fm: &FeatureMap) -> Result<EmbeddingVector> {
    let plane = (fm.height * fm.width) as f64;
    let values = (0..fm.channels).map(|c| fm.channel(c).iter().sum::<f64>() / plane).collect();
    EmbeddingVector::new(id, values)
}
