//! In-distribution density models over pooled embeddings.

pub mod gmm;
pub mod knn;

pub use gmm::{fit_gmm, score_gmm, select_components_bic, GmmConfig, GmmFit, GmmModel};
pub use knn::{build_knn_index, score_knn, KnnIndex, Neighbor};
