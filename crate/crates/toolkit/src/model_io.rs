//! Fitted density models and the `CCMDL1` model file.
//!
//! Layout (little-endian): magic `CCMDL1`, `u16` version, `u8` kind
//! (0 = GMM, 1 = k-NN), then the payload.
//!
//! * GMM: `u64` components, `u64` dim, `u64` trained_on, `u64` seed, then
//!   `f64` weights, means and variances (component-major).
//! * k-NN: `u64` dim, `u64` k, `u64` count, then per point a `u16` id
//!   length, the UTF-8 id and `dim` `f64` values.

use std::path::Path;

use cornercase_core::density::{score_gmm, score_knn, GmmModel, KnnIndex};
use cornercase_core::{EmbeddingVector, Method, ScoreRecord};

use crate::bytes::{put_string, Reader};
use crate::error::{read_file, write_file, Error, Result};

pub const MODEL_MAGIC: &[u8; 6] = b"CCMDL1";
pub const MODEL_VERSION: u16 = 1;

const KIND_GMM: u8 = 0;
const KIND_KNN: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum DensityModel {
    Gmm(GmmModel),
    Knn(KnnIndex),
}

impl DensityModel {
    pub fn method(&self) -> Method {
        match self {
            DensityModel::Gmm(_) => Method::Gmm,
            DensityModel::Knn(_) => Method::Knn,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DensityModel::Gmm(m) => m.dim(),
            DensityModel::Knn(k) => k.dim(),
        }
    }

    pub fn score(&self, z: &EmbeddingVector) -> Result<ScoreRecord> {
        Ok(match self {
            DensityModel::Gmm(m) => score_gmm(m, z)?,
            DensityModel::Knn(k) => score_knn(k, z)?,
        })
    }
}

pub fn encode_model(model: &DensityModel) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    match model {
        DensityModel::Gmm(m) => {
            out.push(KIND_GMM);
            for v in [m.components() as u64, m.dim() as u64, m.trained_on(), m.seed()] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            for v in m.weights().iter().chain(m.means()).chain(m.variances()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        DensityModel::Knn(k) => {
            out.push(KIND_KNN);
            for v in [k.dim() as u64, k.k() as u64, k.len() as u64] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            for (i, id) in k.ids().iter().enumerate() {
                put_string(&mut out, id).map_err(Error::Data)?;
                for v in k.point(i) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

fn read_f64s(r: &mut Reader<'_>, n: usize) -> std::result::Result<Vec<f64>, String> {
    (0..n).map(|_| r.f64()).collect()
}

fn checked_len(a: u64, b: u64) -> std::result::Result<usize, String> {
    a.checked_mul(b)
        .and_then(|n| usize::try_from(n).ok())
        .filter(|&n| n <= 1 << 32)
        .ok_or_else(|| "declared model size is implausibly large".to_string())
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<DensityModel> {
    let fail = |msg: String| Error::format(path, msg);
    let mut r = Reader::new(bytes);
    if r.take(6).map_err(fail)? != MODEL_MAGIC {
        return Err(fail("bad magic bytes, not a CCMDL1 model file".into()));
    }
    let version = r.u16().map_err(fail)?;
    if version != MODEL_VERSION {
        return Err(fail(format!("unsupported model file version {version} (expected {MODEL_VERSION})")));
    }
    let model = match r.u8().map_err(fail)? {
        KIND_GMM => {
            let comps = r.u64().map_err(fail)?;
            let dim = r.u64().map_err(fail)?;
            let trained_on = r.u64().map_err(fail)?;
            let seed = r.u64().map_err(fail)?;
            let block = checked_len(comps, dim).map_err(fail)?;
            let weights = read_f64s(&mut r, checked_len(comps, 1).map_err(fail)?).map_err(fail)?;
            let means = read_f64s(&mut r, block).map_err(fail)?;
            let variances = read_f64s(&mut r, block).map_err(fail)?;
            let m = GmmModel::from_parts(dim as usize, weights, means, variances, trained_on, seed)
                .map_err(|e| fail(e.to_string()))?;
            DensityModel::Gmm(m)
        }
        KIND_KNN => {
            let dim = r.u64().map_err(fail)?;
            let k = r.u64().map_err(fail)?;
            let count = r.u64().map_err(fail)?;
            checked_len(count, dim).map_err(fail)?;
            let mut ids = Vec::with_capacity(count as usize);
            let mut points = Vec::with_capacity((count * dim) as usize);
            for _ in 0..count {
                ids.push(r.string().map_err(fail)?);
                points.extend(read_f64s(&mut r, dim as usize).map_err(fail)?);
            }
            DensityModel::Knn(KnnIndex::from_parts(dim as usize, k as usize, ids, points).map_err(|e| fail(e.to_string()))?)
        }
        other => return Err(fail(format!("unknown model kind {other}"))),
    };
    r.finish().map_err(fail)?;
    Ok(model)
}

pub fn persist_model(model: &DensityModel, path: &Path) -> Result<()> {
    write_file(path, &encode_model(model)?)
}

pub fn restore_model(path: &Path) -> Result<DensityModel> {
    decode_model(&read_file(path)?, path)
}
