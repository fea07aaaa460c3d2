use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::error::Error;

/// Scoring method. All methods share one orientation: a larger score
/// means more in-distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Gmm,
    Knn,
    MeanUncertainty,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Gmm, Method::Knn, Method::MeanUncertainty];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gmm => "gmm",
            Method::Knn => "knn",
            Method::MeanUncertainty => "mean_uncertainty",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::validation(alloc::format!("unknown method {s:?}")))
    }
}

/// One sample's detection score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub id: String,
    pub score: f64,
    pub method: Method,
}

/// ID/OOD decision for a thresholded score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    InDistribution,
    OutOfDistribution,
}

/// A sample is in-distribution iff its score reaches the threshold.
pub fn apply_threshold(score: f64, lambda: f64) -> Decision {
    if score >= lambda {
        Decision::InDistribution
    } else {
        Decision::OutOfDistribution
    }
}
