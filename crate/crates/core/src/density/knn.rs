//! Exact k-th nearest neighbour scoring.

use alloc::string::String;
use alloc::vec::Vec;

use crate::embedding::{EmbeddingSet, EmbeddingVector};
use crate::error::{Error, Result};
use crate::score::{Method, ScoreRecord};

/// Default neighbour rank.
pub const DEFAULT_K: usize = 50;

/// Brute-force index over the in-distribution embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnIndex {
    dim: usize,
    k: usize,
    ids: Vec<String>,
    points: Vec<f64>,
}

/// The k-th nearest stored point for a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Insertion position of the point in the index.
    pub index: usize,
    pub sq_dist: f64,
}

impl KnnIndex {
    /// Assembles an index from raw rows (`ids.len() × dim`, row-major).
    pub fn from_parts(dim: usize, k: usize, ids: Vec<String>, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("index dimension must be positive"));
        }
        if points.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch { expected: ids.len() * dim, found: points.len() });
        }
        if k == 0 {
            return Err(Error::validation("k must be at least 1"));
        }
        if k > ids.len() {
            return Err(Error::validation(alloc::format!("k = {k} exceeds the {} stored points", ids.len())));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("index points must be finite"));
        }
        Ok(Self { dim, k, ids, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Exact k-th neighbour of `query`. Equidistant points are ordered by
    /// insertion position.
    pub fn kth_neighbor(&self, query: &[f64]) -> Result<Neighbor> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: query.len() });
        }
        let mut dists: Vec<(f64, usize)> = self
            .points
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, p)| (squared_distance(p, query), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let (_, kth, _) = dists.select_nth_unstable_by(self.k - 1, order);
        Ok(Neighbor { index: kth.1, sq_dist: kth.0 })
    }
}

/// Squared Euclidean distance, accumulated in index order.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn build_knn_index(set: &EmbeddingSet, k: usize) -> Result<KnnIndex> {
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    set.require_records(k)?;
    let ids = set.iter().map(|r| r.id.clone()).collect();
    let points = set.iter().flat_map(|r| r.values().iter().copied()).collect();
    KnnIndex::from_parts(set.dim(), k, ids, points)
}

/// Negative squared distance to the k-th nearest stored point.
pub fn score_knn(index: &KnnIndex, z: &EmbeddingVector) -> Result<ScoreRecord> {
    let nb = index.kth_neighbor(z.values())?;
    Ok(ScoreRecord { id: z.id.clone(), score: -nb.sq_dist, method: Method::Knn })
}
