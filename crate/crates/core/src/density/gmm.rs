//! Diagonal-covariance Gaussian mixture fitted by expectation maximisation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::embedding::{EmbeddingSet, EmbeddingVector};
use crate::error::{Error, Result};
use crate::rng;
use crate::score::{Method, ScoreRecord};

/// Lower bound applied to every per-dimension variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Candidate component counts for BIC selection.
pub const BIC_CANDIDATES: [usize; 4] = [1, 2, 4, 8];

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmConfig {
    pub components: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Relative log-likelihood improvement below which EM stops.
    pub tol: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self { components: 4, seed: 0, max_iters: 200, tol: 1e-6 }
    }
}

/// Fitted mixture. Means and variances are stored component-major
/// (`k * dim + d`).
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<f64>,
    variances: Vec<f64>,
    trained_on: u64,
    seed: u64,
    // ln w_k - 0.5 * sum_d ln(2 pi var_kd); -inf for empty components
    log_norm: Vec<f64>,
}

impl GmmModel {
    /// Assembles a model from raw parameters, checking every invariant.
    pub fn from_parts(
        dim: usize,
        weights: Vec<f64>,
        means: Vec<f64>,
        variances: Vec<f64>,
        trained_on: u64,
        seed: u64,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || dim == 0 {
            return Err(Error::validation("mixture needs at least one component and one dimension"));
        }
        for len in [means.len(), variances.len()] {
            if len != k * dim {
                return Err(Error::DimensionMismatch { expected: k * dim, found: len });
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::validation("mixture weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if libm::fabs(total - 1.0) > 1e-9 {
            return Err(Error::validation(alloc::format!("mixture weights sum to {total}, not 1")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::validation("mixture means must be finite"));
        }
        if variances.iter().any(|v| !(v.is_finite() && *v >= VARIANCE_FLOOR)) {
            return Err(Error::validation("mixture variances must be finite and at least the floor"));
        }
        let mut model = Self { dim, weights, means, variances, trained_on, seed, log_norm: Vec::new() };
        model.refresh_cache();
        Ok(model)
    }

    fn refresh_cache(&mut self) {
        let dim = self.dim;
        self.log_norm = (0..self.weights.len())
            .map(|k| {
                let w = self.weights[k];
                if w <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let log_det: f64 = self.variances[k * dim..(k + 1) * dim].iter().map(|&v| libm::log(v)).sum();
                libm::log(w) - 0.5 * (dim as f64 * LN_2PI + log_det)
            })
            .collect();
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn variance(&self, k: usize) -> &[f64] {
        &self.variances[k * self.dim..(k + 1) * self.dim]
    }

    pub fn trained_on(&self) -> u64 {
        self.trained_on
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `ln w_k + ln N(x | mu_k, diag var_k)` for one component.
    fn component_log_joint(&self, k: usize, x: &[f64]) -> f64 {
        let base = self.log_norm[k];
        if base == f64::NEG_INFINITY {
            return base;
        }
        let (mu, var) = (self.mean(k), self.variance(k));
        let quad: f64 = x.iter().zip(mu).zip(var).map(|((xi, m), v)| (xi - m) * (xi - m) / v).sum();
        base - 0.5 * quad
    }

    /// Log-density of `x` under the mixture. Panics on a length mismatch;
    /// use [`score_gmm`] for checked scoring.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut buf = vec![0.0; self.components()];
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = self.component_log_joint(k, x);
        }
        log_sum_exp(&buf)
    }
}

/// Stable `ln Σ exp(v_i)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(values.iter().map(|v| libm::exp(v - max)).sum::<f64>())
}

/// Result of an EM run.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Total log-likelihood of the fitting set, starting with the
    /// initialised parameters and then once after every M step.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
}

impl GmmFit {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood.last().expect("trace is never empty")
    }

    /// Bayesian information criterion, lower is better.
    pub fn bic(&self) -> f64 {
        let k = self.model.components() as f64;
        let d = self.model.dim() as f64;
        let params = (k - 1.0) + 2.0 * k * d;
        -2.0 * self.final_log_likelihood() + params * libm::log(self.model.trained_on() as f64)
    }
}

/// Fits a diagonal GMM with k-means++ seeded means, global-variance
/// initial covariances and uniform initial weights.
pub fn fit_gmm(set: &EmbeddingSet, cfg: &GmmConfig) -> Result<GmmFit> {
    if cfg.components == 0 {
        return Err(Error::validation("components must be positive"));
    }
    if cfg.max_iters == 0 || !(cfg.tol > 0.0) {
        return Err(Error::validation("max_iters and tol must be positive"));
    }
    set.require_records(cfg.components.max(2))?;
    let dim = set.dim();
    let n = set.len();
    let data: Vec<&[f64]> = set.iter().map(EmbeddingVector::values).collect();

    let mut global_mean = vec![0.0; dim];
    for x in &data {
        for (m, v) in global_mean.iter_mut().zip(*x) {
            *m += v;
        }
    }
    global_mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut global_var = vec![0.0; dim];
    for x in &data {
        for ((g, v), m) in global_var.iter_mut().zip(*x).zip(&global_mean) {
            *g += (v - m) * (v - m);
        }
    }
    if global_var.iter().all(|&v| v == 0.0) {
        return Err(Error::CollapsedComponent { component: 0 });
    }
    global_var.iter_mut().for_each(|v| *v = (*v / n as f64).max(VARIANCE_FLOOR));

    let centers = kmeans_plus_plus(&data, cfg.components, cfg.seed)?;
    let k = cfg.components;
    let mut means = Vec::with_capacity(k * dim);
    for &c in &centers {
        means.extend_from_slice(data[c]);
    }
    let variances: Vec<f64> = (0..k).flat_map(|_| global_var.iter().copied()).collect();
    let weights = vec![1.0 / k as f64; k];
    let mut model = GmmModel::from_parts(dim, weights, means, variances, n as u64, cfg.seed)?;

    let mut resp = vec![0.0; n * k];
    let mut prev = e_step(&model, &data, &mut resp);
    let mut trace = vec![prev];
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        m_step(&mut model, &data, &resp);
        let ll = e_step(&model, &data, &mut resp);
        trace.push(ll);
        let denom = if prev == 0.0 { 1.0 } else { libm::fabs(prev) };
        let improvement = (ll - prev) / denom;
        prev = ll;
        if improvement < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(GmmFit { model, log_likelihood: trace, converged })
}

/// Fits every candidate component count that the set can support and
/// keeps the fit with the lowest BIC. Returns the winner and the
/// `(components, bic)` table.
pub fn select_components_bic(
    set: &EmbeddingSet,
    cfg: &GmmConfig,
    candidates: &[usize],
) -> Result<(GmmFit, Vec<(usize, f64)>)> {
    let mut best: Option<GmmFit> = None;
    let mut table = Vec::new();
    for &c in candidates.iter().filter(|&&c| c >= 1 && c <= set.len()) {
        let fit = fit_gmm(set, &GmmConfig { components: c, ..*cfg })?;
        let bic = fit.bic();
        table.push((c, bic));
        if best.as_ref().is_none_or(|b| bic < b.bic()) {
            best = Some(fit);
        }
    }
    let best = best.ok_or(Error::InsufficientData { needed: 2, found: set.len() })?;
    Ok((best, table))
}

/// Seeds `k` distinct centres by D² sampling.
fn kmeans_plus_plus(data: &[&[f64]], k: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = rng::seeded(seed);
    let n = data.len();
    let mut centers = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x, data[centers[0]])).collect();
    for component in 1..k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            return Err(Error::CollapsedComponent { component });
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 {
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
        }
        let pick = pick.expect("positive total implies a positive entry");
        centers.push(pick);
        for (slot, x) in d2.iter_mut().zip(data) {
            *slot = slot.min(sq_dist(x, data[pick]));
        }
    }
    Ok(centers)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fills `resp` (row-major `n × k`) with posterior responsibilities and
/// returns the total log-likelihood.
fn e_step(model: &GmmModel, data: &[&[f64]], resp: &mut [f64]) -> f64 {
    let k = model.components();
    let mut total = 0.0;
    for (x, row) in data.iter().zip(resp.chunks_mut(k)) {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = model.component_log_joint(j, x);
        }
        let lse = log_sum_exp(row);
        total += lse;
        row.iter_mut().for_each(|r| *r = libm::exp(*r - lse));
    }
    total
}

fn m_step(model: &mut GmmModel, data: &[&[f64]], resp: &[f64]) {
    let k = model.components();
    let dim = model.dim;
    let n = data.len() as f64;
    for j in 0..k {
        let nk: f64 = resp.iter().skip(j).step_by(k).sum();
        model.weights[j] = nk / n;
        // An empty component keeps its parameters; with zero weight they do
        // not affect the likelihood.
        if nk <= f64::MIN_POSITIVE * n {
            model.weights[j] = 0.0;
            continue;
        }
        let mut mean = vec![0.0; dim];
        for (x, r) in data.iter().zip(resp.iter().skip(j).step_by(k)) {
            for (m, v) in mean.iter_mut().zip(*x) {
                *m += r * v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nk);
        let mut var = vec![0.0; dim];
        for (x, r) in data.iter().zip(resp.iter().skip(j).step_by(k)) {
            for ((s, v), m) in var.iter_mut().zip(*x).zip(&mean) {
                *s += r * (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s = (*s / nk).max(VARIANCE_FLOOR));
        model.means[j * dim..(j + 1) * dim].copy_from_slice(&mean);
        model.variances[j * dim..(j + 1) * dim].copy_from_slice(&var);
    }
    let total: f64 = model.weights.iter().sum();
    model.weights.iter_mut().for_each(|w| *w /= total);
    model.refresh_cache();
}

/// Log-density score of `z` under the fitted mixture.
pub fn score_gmm(model: &GmmModel, z: &EmbeddingVector) -> Result<ScoreRecord> {
    if z.dim() != model.dim {
        return Err(Error::DimensionMismatch { expected: model.dim, found: z.dim() });
    }
    Ok(ScoreRecord { id: z.id.clone(), score: model.log_density(z.values()), method: Method::Gmm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use rand_distr::{Distribution, StandardNormal};

    fn set_from(points: &[Vec<f64>]) -> EmbeddingSet {
        EmbeddingSet::new(
            points.iter().enumerate().map(|(i, p)| EmbeddingVector::new(format!("p{i}"), p.clone()).unwrap()).collect(),
        )
        .unwrap()
    }

    fn gaussian_points(n: usize, dim: usize, center: &[f64], seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|_| (0..dim).map(|d| { let z: f64 = StandardNormal.sample(&mut r); center[d] + z }).collect::<Vec<f64>>())
            .collect()
    }

    #[test]
    fn standard_normal_peak() {
        let m = GmmModel::from_parts(1, vec![1.0], vec![0.0], vec![1.0], 1, 0).unwrap();
        let z = EmbeddingVector::new("z", vec![0.0]).unwrap();
        let s = score_gmm(&m, &z).unwrap().score;
        assert!((s - (-0.918_938_533_204_672_7)).abs() < 1e-12);
    }

    #[test]
    fn mean_scores_above_displaced_points() {
        let m = GmmModel::from_parts(3, vec![1.0], vec![1.0, -2.0, 0.5], vec![0.5, 2.0, 1.0], 1, 0).unwrap();
        let at = m.log_density(&[1.0, -2.0, 0.5]);
        for axis in 0..3 {
            let mut x = [1.0, -2.0, 0.5];
            x[axis] += 3.0 * libm::sqrt(m.variance(0)[axis]);
            assert!(at > m.log_density(&x));
        }
    }

    #[test]
    fn single_gaussian_recovers_sample_mle() {
        let pts = gaussian_points(500, 3, &[2.0, -1.0, 0.0], 11);
        let fit = fit_gmm(&set_from(&pts), &GmmConfig { components: 1, ..Default::default() }).unwrap();
        for d in 0..3 {
            let mean: f64 = pts.iter().map(|p| p[d]).sum::<f64>() / 500.0;
            let var: f64 = pts.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / 500.0;
            let se = libm::sqrt(var / 500.0);
            assert!((fit.model.mean(0)[d] - mean).abs() < 5.0 * se);
            assert!((fit.model.variance(0)[d] - var).abs() < 1e-9);
        }
    }

    #[test]
    fn separates_two_clusters() {
        let mut pts = gaussian_points(200, 2, &[10.0, 10.0], 1);
        pts.extend(gaussian_points(200, 2, &[-10.0, -10.0], 2));
        let fit = fit_gmm(&set_from(&pts), &GmmConfig { components: 2, seed: 3, ..Default::default() }).unwrap();
        let m = &fit.model;
        let (pos, neg) = if m.mean(0)[0] > 0.0 { (0, 1) } else { (1, 0) };
        for d in 0..2 {
            assert!((m.mean(pos)[d] - 10.0).abs() < 0.5);
            assert!((m.mean(neg)[d] + 10.0).abs() < 0.5);
        }
        assert!((m.weights()[0] - 0.5).abs() < 0.1);
        for w in fit.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn rejects_too_few_records_and_collapse() {
        let pts = gaussian_points(3, 2, &[0.0, 0.0], 1);
        let cfg = GmmConfig { components: 4, ..Default::default() };
        assert!(matches!(fit_gmm(&set_from(&pts), &cfg), Err(Error::InsufficientData { .. })));
        let same = vec![vec![1.0, 1.0]; 10];
        assert_eq!(fit_gmm(&set_from(&same), &GmmConfig { components: 1, ..cfg }).unwrap_err(), Error::CollapsedComponent { component: 0 });
        let two = [vec![vec![0.0]; 5], vec![vec![1.0]; 5]].concat();
        assert_eq!(fit_gmm(&set_from(&two), &GmmConfig { components: 3, ..cfg }).unwrap_err(), Error::CollapsedComponent { component: 2 });
        assert!(fit_gmm(&EmbeddingSet::empty(), &cfg).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let pts = gaussian_points(120, 4, &[0.0; 4], 9);
        let cfg = GmmConfig { components: 3, seed: 42, ..Default::default() };
        let a = fit_gmm(&set_from(&pts), &cfg).unwrap();
        let b = fit_gmm(&set_from(&pts), &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log_likelihood, b.log_likelihood);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = GmmModel::from_parts(2, vec![1.0], vec![0.0; 2], vec![1.0; 2], 1, 0).unwrap();
        let z = EmbeddingVector::new("z", vec![0.0]).unwrap();
        assert!(matches!(score_gmm(&m, &z), Err(Error::DimensionMismatch { expected: 2, found: 1 })));
    }

    #[test]
    fn bic_prefers_two_components_for_two_clusters() {
        let mut pts = gaussian_points(150, 2, &[8.0, 0.0], 4);
        pts.extend(gaussian_points(150, 2, &[-8.0, 0.0], 5));
        let (best, table) = select_components_bic(&set_from(&pts), &GmmConfig { seed: 1, ..Default::default() }, &BIC_CANDIDATES).unwrap();
        assert_eq!(table.len(), 4);
        assert!(best.model.components() >= 2);
        let bic1 = table.iter().find(|(c, _)| *c == 1).unwrap().1;
        assert!(best.bic() < bic1);
    }

    #[test]
    fn parts_validation() {
        assert!(GmmModel::from_parts(1, vec![0.4, 0.4], vec![0.0; 2], vec![1.0; 2], 1, 0).is_err());
        assert!(GmmModel::from_parts(1, vec![1.0], vec![0.0], vec![1e-9], 1, 0).is_err());
        assert!(GmmModel::from_parts(1, vec![1.0], vec![0.0, 1.0], vec![1.0], 1, 0).is_err());
    }
}
