//! Threshold-free detection metrics over labelled scores.
//!
//! Conventions: scores are oriented so that larger means more
//! in-distribution; TPR is measured on the ID side, FPR on the OOD side.
//! AUPR-IN treats ID as the positive class, AUPR-OUT treats OOD as
//! positive and ranks by negated score. Tied scores share one threshold.
//! All results are percentages.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default recall target for FPR@TPR.
pub const DEFAULT_TPR: f64 = 0.95;

/// Scores of in-distribution and out-of-distribution samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    id_scores: Vec<f64>,
    ood_scores: Vec<f64>,
}

impl LabeledScores {
    pub fn new(id_scores: Vec<f64>, ood_scores: Vec<f64>) -> Result<Self> {
        if id_scores.is_empty() || ood_scores.is_empty() {
            return Err(Error::validation("both ID and OOD scores must be non-empty"));
        }
        if id_scores.iter().chain(&ood_scores).any(|v| !v.is_finite()) {
            return Err(Error::validation("scores must be finite"));
        }
        Ok(Self { id_scores, ood_scores })
    }

    pub fn id_scores(&self) -> &[f64] {
        &self.id_scores
    }

    pub fn ood_scores(&self) -> &[f64] {
        &self.ood_scores
    }

    /// Applies `f` to every score.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.id_scores.iter().map(|&v| f(v)).collect(), self.ood_scores.iter().map(|&v| f(v)).collect())
    }

    /// Exchanges the ID and OOD sides.
    pub fn swapped(&self) -> Self {
        Self { id_scores: self.ood_scores.clone(), ood_scores: self.id_scores.clone() }
    }
}

/// Which class AUPR treats as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positive {
    In,
    Out,
}

/// One row of a detection results table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionReport {
    pub fpr_at_95: f64,
    pub auroc: f64,
    pub aupr_in: f64,
    pub aupr_out: f64,
}

impl DetectionReport {
    pub fn compute(s: &LabeledScores) -> Result<Self> {
        Ok(Self {
            fpr_at_95: fpr_at_tpr(s, DEFAULT_TPR)?,
            auroc: auroc(s),
            aupr_in: aupr(s, Positive::In),
            aupr_out: aupr(s, Positive::Out),
        })
    }
}

fn percent(v: f64) -> f64 {
    (100.0 * v).clamp(0.0, 100.0)
}

/// Mann-Whitney area under the ROC curve with half credit for ties.
pub fn auroc(s: &LabeledScores) -> f64 {
    let n_id = s.id_scores.len();
    let n_ood = s.ood_scores.len();
    let mut all: Vec<(f64, bool)> = s
        .id_scores
        .iter()
        .map(|&v| (v, true))
        .chain(s.ood_scores.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of ID midranks; ranks are 1-based and ties share their mean rank.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        let ids = all[i..j].iter().filter(|e| e.1).count();
        rank_sum += midrank * ids as f64;
        i = j;
    }
    let u = rank_sum - (n_id * (n_id + 1)) as f64 / 2.0;
    percent(u / (n_id as f64 * n_ood as f64))
}

/// Largest threshold that keeps at least `tpr_target` of `scores` at or
/// above it.
pub fn calibrate_threshold(scores: &[f64], tpr_target: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::validation("cannot calibrate a threshold on no scores"));
    }
    if !(tpr_target > 0.0 && tpr_target <= 1.0) {
        return Err(Error::validation(alloc::format!("TPR target {tpr_target} outside (0, 1]")));
    }
    let n = scores.len();
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let keeps = |m: usize| m as f64 / n as f64 >= tpr_target;
    // Smallest kept count meeting the target, decided with the same
    // floating-point predicate the definition uses.
    let mut need = (libm::ceil(tpr_target * n as f64) as usize).clamp(1, n);
    while need > 1 && keeps(need - 1) {
        need -= 1;
    }
    while !keeps(need) {
        need += 1;
    }
    Ok(sorted[need - 1])
}

/// Percentage of `negatives` at or above the threshold calibrated on
/// `positives`.
fn fpr_at_recall(positives: &[f64], negatives: &[f64], tpr_target: f64) -> Result<f64> {
    let lambda = calibrate_threshold(positives, tpr_target)?;
    let hits = negatives.iter().filter(|&&v| v >= lambda).count();
    Ok(percent(hits as f64 / negatives.len() as f64))
}

/// OOD false-positive rate at the threshold retaining `tpr_target` of ID.
pub fn fpr_at_tpr(s: &LabeledScores, tpr_target: f64) -> Result<f64> {
    fpr_at_recall(&s.id_scores, &s.ood_scores, tpr_target)
}

/// Step-wise average precision `Σ (R_n − R_{n−1}) · P_n` over descending
/// distinct thresholds. Returns a fraction.
fn average_precision(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> =
        positives.iter().map(|&v| (v, true)).chain(negatives.iter().map(|&v| (v, false))).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total_pos = positives.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let recall = tp as f64 / total_pos;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    ap
}

/// Area under the precision-recall curve for the chosen positive class.
pub fn aupr(s: &LabeledScores, positive: Positive) -> f64 {
    match positive {
        Positive::In => percent(average_precision(&s.id_scores, &s.ood_scores)),
        Positive::Out => {
            let pos: Vec<f64> = s.ood_scores.iter().map(|v| -v).collect();
            let neg: Vec<f64> = s.id_scores.iter().map(|v| -v).collect();
            percent(average_precision(&pos, &neg))
        }
    }
}

/// Per-pixel anomaly scores (larger means more anomalous) with ground
/// truth and a validity mask, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelScoreMap {
    height: usize,
    width: usize,
    scores: Vec<f64>,
    ground_truth: Vec<bool>,
    valid: Vec<bool>,
}

impl PixelScoreMap {
    pub fn new(height: usize, width: usize, scores: Vec<f64>, ground_truth: Vec<bool>, valid: Vec<bool>) -> Result<Self> {
        let n = height * width;
        for len in [scores.len(), ground_truth.len(), valid.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        if scores.iter().zip(&valid).any(|(s, &ok)| ok && !s.is_finite()) {
            return Err(Error::validation("valid pixel scores must be finite"));
        }
        Ok(Self { height, width, scores, ground_truth, valid })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Valid anomaly and valid background pixel scores.
    fn split(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for ((&s, &gt), &ok) in self.scores.iter().zip(&self.ground_truth).zip(&self.valid) {
            if ok {
                if gt { pos.push(s) } else { neg.push(s) }
            }
        }
        (pos, neg)
    }
}

/// Average precision of anomaly pixels over valid pixels.
pub fn pixel_average_precision(m: &PixelScoreMap) -> Result<f64> {
    let (pos, neg) = m.split();
    if pos.is_empty() {
        return Err(Error::validation("no valid anomaly pixels"));
    }
    Ok(percent(average_precision(&pos, &neg)))
}

/// Background false-positive rate at `tpr_target` recall of anomaly
/// pixels.
pub fn pixel_fpr_at_tpr(m: &PixelScoreMap, tpr_target: f64) -> Result<f64> {
    let (pos, neg) = m.split();
    if pos.is_empty() {
        return Err(Error::validation("no valid anomaly pixels"));
    }
    if neg.is_empty() {
        return Err(Error::validation("no valid background pixels"));
    }
    fpr_at_recall(&pos, &neg, tpr_target)
}
