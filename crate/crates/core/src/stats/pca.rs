//! Principal component analysis by exact dense eigendecomposition.

use alloc::vec;
use alloc::vec::Vec;

use super::eigen::symmetric_eigen;
use crate::embedding::{EmbeddingSet, EmbeddingVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    input_dim: usize,
    mean: Vec<f64>,
    /// `k × input_dim`, orthonormal rows.
    components: Vec<f64>,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.explained_variance.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.components[i * self.input_dim..(i + 1) * self.input_dim]
    }

    /// Sample variances (n − 1 denominator) along each component,
    /// descending.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// `mean + componentsᵀ · coords`.
    pub fn reconstruct(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), found: coords.len() });
        }
        let mut out = self.mean.clone();
        for (i, &c) in coords.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(self.component(i)) {
                *o += c * w;
            }
        }
        Ok(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = libm::sqrt(dot(v, v));
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is
/// positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if libm::fabs(*x) > libm::fabs(v[best]) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Orthonormal vector orthogonal to all of `basis` (rows of length `dim`),
/// built by Gram-Schmidt over the standard basis.
fn orthogonal_completion(basis: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best = vec![0.0; dim];
    let mut best_norm = -1.0;
    for axis in 0..dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = libm::sqrt(dot(&v, &v));
        if norm > best_norm {
            best_norm = norm;
            best = v;
        }
        if norm > 0.5 {
            break;
        }
    }
    normalize(&mut best);
    best
}

/// Fits the top-`k` principal axes. Uses the `dim × dim` covariance when
/// `dim ≤ n`, otherwise the `n × n` Gram matrix of the centred data.
pub fn pca_fit(data: &EmbeddingSet, k: usize) -> Result<PcaModel> {
    data.require_records(2)?;
    let n = data.len();
    let dim = data.dim();
    let max_k = dim.min(n - 1);
    if k == 0 || k > max_k {
        return Err(Error::validation(alloc::format!("k = {k} outside 1..={max_k} for {n} records of dim {dim}")));
    }
    let mut mean = vec![0.0; dim];
    for r in data.iter() {
        mean.iter_mut().zip(r.values()).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> =
        data.iter().map(|r| r.values().iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();
    let denom = (n - 1) as f64;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut variances: Vec<f64> = Vec::with_capacity(k);
    if dim <= n {
        let mut cov = vec![0.0; dim * dim];
        for x in &centered {
            for i in 0..dim {
                let xi = x[i];
                for j in 0..=i {
                    cov[i * dim + j] += xi * x[j];
                }
            }
        }
        for i in 0..dim {
            for j in 0..=i {
                let v = cov[i * dim + j] / denom;
                cov[i * dim + j] = v;
                cov[j * dim + i] = v;
            }
        }
        let eig = symmetric_eigen(&cov, dim)?;
        for j in (dim - k..dim).rev() {
            rows.push(eig.vector(j));
            variances.push(eig.values[j].max(0.0));
        }
    } else {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&centered[i], &centered[j]) / denom;
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        let eig = symmetric_eigen(&gram, n)?;
        let scale = eig.values.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        for j in (n - k..n).rev() {
            let lambda = eig.values[j].max(0.0);
            let mut v = vec![0.0; dim];
            if lambda > scale * 1e-12 {
                for (x, &u) in centered.iter().zip(eig.vector(j).iter()) {
                    v.iter_mut().zip(x).for_each(|(acc, xi)| *acc += u * xi);
                }
                normalize(&mut v);
            } else {
                v = orthogonal_completion(&rows, dim);
            }
            rows.push(v);
            variances.push(lambda);
        }
    }
    for r in &mut rows {
        fix_sign(r);
    }
    Ok(PcaModel { input_dim: dim, mean, components: rows.concat(), explained_variance: variances })
}

/// Projects `z` onto the fitted components.
pub fn pca_transform(model: &PcaModel, z: &EmbeddingVector) -> Result<EmbeddingVector> {
    if z.dim() != model.input_dim {
        return Err(Error::DimensionMismatch { expected: model.input_dim, found: z.dim() });
    }
    let centered: Vec<f64> = z.values().iter().zip(&model.mean).map(|(v, m)| v - m).collect();
    let coords = (0..model.output_dim()).map(|i| dot(model.component(i), &centered)).collect();
    EmbeddingVector::new(z.id.clone(), coords)
}
