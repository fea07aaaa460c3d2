//! Independent reference implementations, written for clarity rather
//! than speed. Shared by the core tests and the acceptance suite.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Continuous, Dirichlet};

/// Pairwise AUROC in percent: P(id > ood) + ½ P(id = ood).
pub fn auroc(id: &[f64], ood: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &a in id {
        for &b in ood {
            if a > b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    100.0 * wins / (id.len() * ood.len()) as f64
}

fn distinct_desc(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut t: Vec<f64> = v.collect();
    t.sort_by(|a, b| b.total_cmp(a));
    t.dedup();
    t
}

/// Scans every candidate threshold; keeps the largest one that accepts at
/// least `target` of the positives, and returns the accepted share of
/// negatives in percent.
pub fn fpr_at_tpr(pos: &[f64], neg: &[f64], target: f64) -> f64 {
    let n = pos.len() as f64;
    for t in distinct_desc(pos.iter().copied()) {
        let kept = pos.iter().filter(|&&v| v >= t).count() as f64;
        if kept / n >= target {
            return 100.0 * neg.iter().filter(|&&v| v >= t).count() as f64 / neg.len() as f64;
        }
    }
    unreachable!("the lowest positive accepts everything")
}

/// `Σ (R_i − R_{i−1}) · P_i` with one step per distinct threshold.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> f64 {
    let mut ap = 0.0;
    let mut prev = 0.0;
    for t in distinct_desc(pos.iter().chain(neg).copied()) {
        let tp = pos.iter().filter(|&&v| v >= t).count() as f64;
        let fp = neg.iter().filter(|&&v| v >= t).count() as f64;
        let recall = tp / pos.len() as f64;
        if tp > 0.0 {
            ap += (recall - prev) * tp / (tp + fp);
        }
        prev = recall;
    }
    100.0 * ap
}

pub fn aupr_in(id: &[f64], ood: &[f64]) -> f64 {
    average_precision(id, ood)
}

pub fn aupr_out(id: &[f64], ood: &[f64]) -> f64 {
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    average_precision(&neg(ood), &neg(id))
}

/// Negative squared distance to the k-th nearest point by full sort.
pub fn knn_score(points: &[Vec<f64>], q: &[f64], k: usize) -> f64 {
    let mut d: Vec<f64> = points.iter().map(|p| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()).collect();
    d.sort_by(f64::total_cmp);
    -d[k - 1]
}

/// Direct mixture density, summed in linear space.
pub fn gmm_density(weights: &[f64], means: &[Vec<f64>], vars: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((w, mu), var) in weights.iter().zip(means).zip(vars) {
        let mut p = *w;
        for ((xi, m), v) in x.iter().zip(mu).zip(var) {
            p *= (-(xi - m) * (xi - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        }
        total += p;
    }
    total
}

pub fn dirichlet_pdf(kappa: &[f64], p: &[f64]) -> f64 {
    Dirichlet::new(kappa.to_vec()).unwrap().pdf(&DVector::from_vec(p.to_vec()))
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// 1-based ranks with ties sharing their average rank, by counting.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let below = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let mut s = f(a) + f(b);
    for i in 1..steps {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Two-sided p-value of a correlation by integrating the (unnormalised)
/// Student-t density with Simpson's rule.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let t = r.abs() * (df / (1.0 - r * r)).sqrt();
    let g = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let upper = 1e3;
    let tail = simpson(g, t, upper, 2_000_000);
    let half = simpson(g, 0.0, upper, 2_000_000);
    tail / half
}

/// Principal axes of the sample covariance via nalgebra, descending.
pub fn pca(rows: &[Vec<f64>], k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rows.len();
    let d = rows[0].len();
    let m = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mean = m.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| m[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vecs = order[..k].iter().map(|&j| eig.eigenvectors.column(j).iter().copied().collect()).collect();
    let vals = order[..k].iter().map(|&j| eig.eigenvalues[j]).collect();
    (vecs, vals)
}
