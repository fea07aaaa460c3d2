//! File formats, PNG I/O, configs, the benchmark runner and report
//! rendering on top of `cornercase-core`.

pub mod bench;
mod bytes;
pub mod config;
pub mod embed_io;
pub mod error;
pub mod export;
pub mod image_io;
pub mod model_io;
pub mod report;
pub mod scores_io;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
