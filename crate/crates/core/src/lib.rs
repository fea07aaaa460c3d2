//! Numerical core for latent-space corner-case detection: embedding
//! pooling, in-distribution density models, evidential uncertainty,
//! detection metrics, image corruptions and correlation/PCA statistics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, image I/O
//! and the benchmark runner live in the `cornercase` crate.
#![no_std]
extern crate alloc;

pub mod corruption;
pub mod density;
pub mod embedding;
pub mod encoder;
pub mod error;
pub mod image;
pub mod metrics;
pub mod rng;
pub mod score;
pub mod stats;
pub mod uncertainty;

pub use embedding::{pool_spatial_mean, EmbeddingSet, EmbeddingVector, FeatureMap};
pub use error::{Error, Result};
pub use image::{DepthMap, ImageBuffer};
pub use metrics::{DetectionReport, LabeledScores};
pub use score::{apply_threshold, Decision, Method, ScoreRecord};
