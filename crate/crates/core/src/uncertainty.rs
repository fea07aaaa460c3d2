//! Dirichlet evidential quantities and image-level uncertainty
//! aggregation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::score::{Method, ScoreRecord};

/// Concentration parameters of a Dirichlet over `K ≥ 2` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    kappa: Vec<f64>,
}

impl DirichletParams {
    pub fn new(kappa: Vec<f64>) -> Result<Self> {
        if kappa.len() < 2 {
            return Err(Error::validation("a Dirichlet needs at least two concentration parameters"));
        }
        if kappa.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::validation("concentration parameters must be positive and finite"));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn classes(&self) -> usize {
        self.kappa.len()
    }

    /// Same distribution with every concentration multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.kappa.iter().map(|k| k * c).collect())
    }
}

/// Value of a density that may diverge on the simplex boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Finite(f64),
    /// Some `p_k = 0` with `κ_k < 1`: the density grows without bound.
    Unbounded,
}

impl Density {
    pub fn finite(self) -> Option<f64> {
        match self {
            Density::Finite(v) => Some(v),
            Density::Unbounded => None,
        }
    }
}

/// Tolerance on `Σ p_k = 1`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Natural log of the multivariate Beta normaliser `Γ(Σκ) / ∏ Γ(κ_k)`.
pub fn log_normalizer(params: &DirichletParams) -> f64 {
    let total: f64 = params.kappa.iter().sum();
    libm::lgamma(total) - params.kappa.iter().map(|&k| libm::lgamma(k)).sum::<f64>()
}

/// `Dir(p | κ)`, evaluated in log space.
///
/// On the boundary a class with `p_k = 0` contributes factor 1 when
/// `κ_k = 1`, factor 0 when `κ_k > 1`, and makes the density unbounded when
/// `κ_k < 1`.
pub fn dirichlet_pdf(params: &DirichletParams, p: &[f64]) -> Result<Density> {
    if p.len() != params.classes() {
        return Err(Error::DimensionMismatch { expected: params.classes(), found: p.len() });
    }
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::validation("probabilities must be finite and non-negative"));
    }
    let total: f64 = p.iter().sum();
    if libm::fabs(total - 1.0) > SIMPLEX_TOL {
        return Err(Error::validation(alloc::format!("probabilities sum to {total}, not 1")));
    }
    let mut log_kernel = 0.0;
    for (&pk, &kk) in p.iter().zip(&params.kappa) {
        if pk == 0.0 {
            if kk < 1.0 {
                return Ok(Density::Unbounded);
            }
            if kk > 1.0 {
                return Ok(Density::Finite(0.0));
            }
            continue;
        }
        log_kernel += (kk - 1.0) * libm::log(pk);
    }
    Ok(Density::Finite(libm::exp(log_normalizer(params) + log_kernel)))
}

/// Evidential uncertainty `K / Σ κ_k`.
pub fn dirichlet_uncertainty(params: &DirichletParams) -> f64 {
    params.classes() as f64 / params.kappa.iter().sum::<f64>()
}

/// Pixel-wise uncertainty in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl UncertaintyMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::validation("uncertainty map is empty"));
        }
        if values.len() != height * width {
            return Err(Error::DimensionMismatch { expected: height * width, found: values.len() });
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation("uncertainty values must lie in [0, 1]"));
        }
        Ok(Self { height, width, values })
    }

    /// Decodes 16-bit samples as `value / 65535`.
    pub fn from_u16(height: usize, width: usize, raw: &[u16]) -> Result<Self> {
        Self::new(height, width, raw.iter().map(|&v| f64::from(v) / 65535.0).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean over all pixels.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Image-level score `-Ū`: the mean uncertainty, negated so that larger
/// means more in-distribution.
pub fn mean_uncertainty(id: impl Into<String>, map: &UncertaintyMap) -> ScoreRecord {
    ScoreRecord { id: id.into(), score: -map.mean(), method: Method::MeanUncertainty }
}
