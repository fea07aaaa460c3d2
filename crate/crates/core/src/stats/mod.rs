//! Correlation analysis and principal component analysis.

pub mod correlation;
pub mod eigen;
pub mod pca;
pub mod special;

pub use correlation::{midranks, pearson, spearman, CorrelationKind, CorrelationResult};
pub use pca::{pca_fit, pca_transform, PcaModel};
