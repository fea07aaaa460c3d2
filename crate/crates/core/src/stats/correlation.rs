//! Pearson and Spearman correlation with t-test p-values.

use alloc::vec::Vec;

use super::special::student_t_two_sided;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationKind {
    Pearson,
    Spearman,
}

impl CorrelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationKind::Pearson => "pearson",
            CorrelationKind::Spearman => "spearman",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    /// Coefficient in `[-1, 1]`.
    pub coefficient: f64,
    /// Two-sided p-value for `H0: ρ = 0`.
    pub p_value: f64,
    pub n: usize,
    pub kind: CorrelationKind,
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::validation("correlation inputs must be finite"));
    }
    Ok(())
}

fn sample_coefficient(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("correlation of a constant series is undefined".into()));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Two-sided p-value from `t = r·√(n−2)/√(1−r²)` with `n − 2` degrees of
/// freedom. Perfect correlation gives 0; with fewer than three samples
/// there are no degrees of freedom and the p-value is 1.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    if libm::fabs(r) >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * libm::sqrt(df) / libm::sqrt(1.0 - r * r);
    student_t_two_sided(t, df)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    let r = sample_coefficient(x, y)?;
    Ok(CorrelationResult { coefficient: r, p_value: correlation_p_value(r, x.len()), n: x.len(), kind: CorrelationKind::Pearson })
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = rank;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation of midranks; the p-value uses the same t
/// approximation as [`pearson`], which is rough below n ≈ 10.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    let r = sample_coefficient(&midranks(x), &midranks(y))?;
    Ok(CorrelationResult { coefficient: r, p_value: correlation_p_value(r, x.len()), n: x.len(), kind: CorrelationKind::Spearman })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_linearity() {
        let x = [1.0, 2.0, 3.5, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let r = pearson(&x, &y).unwrap();
        assert!((r.coefficient - 1.0).abs() < 1e-15);
        assert_eq!(r.p_value, 0.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap().coefficient + 1.0).abs() < 1e-15);
    }

    #[test]
    fn spearman_rank_cases() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|v| libm::exp(*v)).collect();
        assert_eq!(spearman(&x, &y).unwrap().coefficient, 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap().coefficient, -1.0);
    }

    #[test]
    fn ties_use_midranks() {
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        // ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4): sxy = 4.5, sxx = 4.5, syy = 5
        let rho = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap().coefficient;
        assert!((rho - 4.5 / libm::sqrt(4.5 * 5.0)).abs() < 1e-15);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Degenerate(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn two_samples_have_no_evidence() {
        let r = pearson(&[1.0, 2.0], &[3.0, 5.0]).unwrap();
        assert_eq!(r.coefficient, 1.0);
        assert_eq!(r.p_value, 1.0);
    }
}
