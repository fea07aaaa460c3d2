//! Declarative benchmark runner.
//!
//! Seed derivation from the config-level `seed`:
//! * GMM initialisation uses `seed` directly;
//! * sweep step `i` uses `derive_seed(seed, SWEEP_STREAM) + i`;
//! * image `j` within a sweep step uses `derive_seed(step_seed, j)`.

use std::path::Path;

use cornercase_core::corruption::{severity_sweep, CorruptionKind, CorruptionSpec};
use cornercase_core::density::gmm::{fit_gmm, select_components_bic, BIC_CANDIDATES};
use cornercase_core::density::knn::build_knn_index;
use cornercase_core::encoder::toy_encode;
use cornercase_core::metrics::{DetectionReport, LabeledScores};
use cornercase_core::rng::derive_seed;
use cornercase_core::stats::{pearson, spearman, CorrelationResult};
use cornercase_core::uncertainty::{mean_uncertainty, UncertaintyMap};
use cornercase_core::{DepthMap, EmbeddingSet, ImageBuffer, Method};

use crate::config::{BenchConfig, DatasetManifest, SweepConfig, SweepEncoder};
use crate::embed_io::{load_embeddings, EmbeddingFormat};
use crate::error::{Error, Result};
use crate::image_io::{file_name, list_pngs, read_depth_png, read_rgb_png, read_uncertainty_png};
use crate::model_io::DensityModel;

/// Stream index mixed into the config seed for sweep corruption seeds.
pub const SWEEP_STREAM: u64 = 0x5EED;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub dataset: String,
    pub report: DetectionReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: String,
    pub kind: String,
    pub severity: f64,
    pub report: DetectionReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub method: String,
    /// `fpr_at_95` or `auroc`, correlated against severity.
    pub metric: String,
    pub result: CorrelationResult,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
    pub sweep_rows: Vec<SweepRow>,
    pub correlations: Vec<CorrelationRow>,
    /// Ordered key-value audit trail (config hash, seeds, version, ...).
    pub provenance: Vec<(String, String)>,
}

/// Labelled images, sorted by file name.
pub type ImageSet = Vec<(String, ImageBuffer)>;

/// The embeddings of a split, plus the decoded images when the split is
/// an image directory.
pub struct LoadedSplit {
    pub embeddings: EmbeddingSet,
    pub images: Option<ImageSet>,
}

pub fn load_images(dir: &Path) -> Result<ImageSet> {
    list_pngs(dir)?.iter().map(|p| Ok((file_name(p), read_rgb_png(p)?))).collect()
}

pub fn encode_images(images: &[(String, ImageBuffer)], grid: usize) -> Result<EmbeddingSet> {
    let records = images.iter().map(|(id, img)| toy_encode(id.clone(), img, grid)).collect::<std::result::Result<_, _>>()?;
    Ok(EmbeddingSet::new(records)?)
}

pub fn load_split(path: &Path, grid: usize) -> Result<LoadedSplit> {
    if path.is_dir() {
        let images = load_images(path)?;
        if images.is_empty() {
            return Err(Error::Data(format!("no PNG images in {}", path.display())));
        }
        Ok(LoadedSplit { embeddings: encode_images(&images, grid)?, images: Some(images) })
    } else {
        Ok(LoadedSplit { embeddings: load_embeddings(path, EmbeddingFormat::from_path(path))?, images: None })
    }
}

/// Mean-uncertainty scores for every map of a dataset.
pub fn load_uncertainty_scores(path: &Path) -> Result<Vec<f64>> {
    let maps: Vec<UncertaintyMap> = if path.is_dir() {
        list_pngs(path)?.iter().map(|p| read_uncertainty_png(p)).collect::<Result<_>>()?
    } else {
        let set = load_embeddings(path, EmbeddingFormat::from_path(path))?;
        set.iter()
            .map(|r| UncertaintyMap::new(1, r.dim(), r.values().to_vec()).map_err(|e| Error::Data(format!("{}: {e}", r.id))))
            .collect::<Result<_>>()?
    };
    if maps.is_empty() {
        return Err(Error::Data(format!("no uncertainty maps in {}", path.display())));
    }
    Ok(maps.iter().map(|m| mean_uncertainty("", m).score).collect())
}

fn check_dim(train: &EmbeddingSet, other: &EmbeddingSet, name: &str) -> Result<()> {
    if !other.is_empty() && train.dim() != other.dim() {
        return Err(Error::Data(format!(
            "dataset {name:?} has dimension {} but the training set has dimension {}",
            other.dim(),
            train.dim()
        )));
    }
    Ok(())
}

/// Fits the density model for `method` on `train`.
pub fn fit_method(method: Method, train: &EmbeddingSet, cfg: &BenchConfig) -> Result<DensityModel> {
    match method {
        Method::Gmm => {
            let fit = if cfg.gmm.bic {
                select_components_bic(train, &cfg.gmm_config(), &BIC_CANDIDATES)?.0
            } else {
                fit_gmm(train, &cfg.gmm_config())?
            };
            Ok(DensityModel::Gmm(fit.model))
        }
        Method::Knn => Ok(DensityModel::Knn(build_knn_index(train, cfg.knn.k)?)),
        Method::MeanUncertainty => Err(Error::Config("mean_uncertainty has no density model".into())),
    }
}

pub fn score_set(model: &DensityModel, set: &EmbeddingSet) -> Result<Vec<f64>> {
    set.iter().map(|z| model.score(z).map(|r| r.score)).collect()
}

fn detection(id: &[f64], ood: Vec<f64>, what: &str) -> Result<DetectionReport> {
    let s = LabeledScores::new(id.to_vec(), ood).map_err(|e| Error::Data(format!("{what}: {e}")))?;
    Ok(DetectionReport::compute(&s)?)
}

/// Per-severity detection of corrupted copies of the ID test images
/// against their clean scores, plus Pearson and Spearman correlations of
/// severity with FPR@95 and AUROC for every model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub correlations: Vec<CorrelationRow>,
}

/// Corrupts and encodes every image for one sweep step.
pub fn corrupt_and_encode(
    images: &[(String, ImageBuffer)],
    depths: Option<&[DepthMap]>,
    spec: &CorruptionSpec,
    grid: usize,
) -> Result<EmbeddingSet> {
    let mut records = Vec::with_capacity(images.len());
    for (j, (id, img)) in images.iter().enumerate() {
        let per_image = CorruptionSpec { seed: derive_seed(spec.seed, j as u64), ..*spec };
        let out = per_image.apply(img, depths.map(|d| &d[j]))?;
        records.push(toy_encode(id.clone(), &out, grid)?);
    }
    Ok(EmbeddingSet::new(records)?)
}

/// Scores each sweep step with every model and assembles the outcome.
/// `corrupted[i]` holds the embeddings for `specs[i]`.
pub fn evaluate_sweep(
    models: &[DensityModel],
    clean_scores: &[Vec<f64>],
    specs: &[CorruptionSpec],
    corrupted: &[EmbeddingSet],
) -> Result<SweepOutcome> {
    let mut out = SweepOutcome::default();
    for (model, id_scores) in models.iter().zip(clean_scores) {
        let mut fpr = Vec::new();
        let mut auroc = Vec::new();
        for (spec, set) in specs.iter().zip(corrupted) {
            let what = format!("{} sweep at {}", spec.kind, spec.severity);
            let report = detection(id_scores, score_set(model, set)?, &what)?;
            fpr.push(report.fpr_at_95);
            auroc.push(report.auroc);
            out.rows.push(SweepRow {
                method: model.method().to_string(),
                kind: spec.kind.to_string(),
                severity: spec.severity,
                report,
            });
        }
        let severities: Vec<f64> = specs.iter().map(|s| s.severity).collect();
        for (metric, values) in [("fpr_at_95", &fpr), ("auroc", &auroc)] {
            for corr in [pearson, spearman] {
                // A metric that does not vary has no defined correlation.
                match corr(&severities, values) {
                    Ok(result) => out.correlations.push(CorrelationRow {
                        method: model.method().to_string(),
                        metric: metric.to_string(),
                        result,
                    }),
                    Err(cornercase_core::Error::Degenerate(_) | cornercase_core::Error::InsufficientData { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    Ok(out)
}

/// In-memory image sweep: fits every density method on `train`, scores
/// clean `test` images as ID and each corrupted copy as OOD.
pub fn run_image_sweep(
    cfg: &BenchConfig,
    sweep: &SweepConfig,
    train: &[(String, ImageBuffer)],
    test: &[(String, ImageBuffer)],
    depths: Option<&[DepthMap]>,
) -> Result<SweepOutcome> {
    let grid = cfg.encoder.grid;
    let train_set = encode_images(train, grid)?;
    let test_set = encode_images(test, grid)?;
    let specs = sweep_specs(cfg, sweep)?;
    let mut models = Vec::new();
    let mut clean = Vec::new();
    for m in cfg.methods.iter().filter(|m| **m != Method::MeanUncertainty) {
        let model = fit_method(*m, &train_set, cfg)?;
        clean.push(score_set(&model, &test_set)?);
        models.push(model);
    }
    let corrupted = specs.iter().map(|s| corrupt_and_encode(test, depths, s, grid)).collect::<Result<Vec<_>>>()?;
    evaluate_sweep(&models, &clean, &specs, &corrupted)
}

pub fn sweep_specs(cfg: &BenchConfig, sweep: &SweepConfig) -> Result<Vec<CorruptionSpec>> {
    let base = derive_seed(cfg.seed, SWEEP_STREAM);
    severity_sweep(sweep.kind, &sweep.grid, base, sweep.atmospheric_light).map_err(|e| Error::Config(e.to_string()))
}

fn load_depths(dir: &Path, images: &[(String, ImageBuffer)]) -> Result<Vec<DepthMap>> {
    images.iter().map(|(name, _)| read_depth_png(&dir.join(name))).collect()
}

fn require_path(d: &DatasetManifest) -> Result<&Path> {
    d.path.as_deref().ok_or_else(|| Error::Config(format!("dataset {:?} has no `path`", d.name)))
}

/// Runs every configured method against every OOD set, then the optional
/// sweep. The result depends only on the config and the files it names.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    let grid = cfg.encoder.grid;
    let density_methods: Vec<Method> = cfg.methods.iter().copied().filter(|m| *m != Method::MeanUncertainty).collect();
    let mut report = BenchReport::default();

    let mut train = None;
    let mut test = None;
    let mut oods: Vec<Option<LoadedSplit>> = Vec::new();
    if !density_methods.is_empty() {
        let tr = load_split(require_path(&cfg.id_train)?, grid)?;
        let te = load_split(require_path(&cfg.id_test)?, grid)?;
        check_dim(&tr.embeddings, &te.embeddings, &cfg.id_test.name)?;
        for o in &cfg.ood_sets {
            let split = load_split(require_path(o)?, grid)?;
            check_dim(&tr.embeddings, &split.embeddings, &o.name)?;
            oods.push(Some(split));
        }
        train = Some(tr);
        test = Some(te);
    }

    let mut models = Vec::new();
    let mut clean_scores = Vec::new();
    for &method in &cfg.methods {
        let (id_scores, ood_scores): (Vec<f64>, Vec<Vec<f64>>) = if method == Method::MeanUncertainty {
            let unc = |d: &DatasetManifest| load_uncertainty_scores(d.uncertainty.as_deref().expect("validated"));
            (unc(&cfg.id_test)?, cfg.ood_sets.iter().map(unc).collect::<Result<_>>()?)
        } else {
            let model = fit_method(method, &train.as_ref().expect("loaded").embeddings, cfg)?;
            let id = score_set(&model, &test.as_ref().expect("loaded").embeddings)?;
            let ood = oods.iter().map(|o| score_set(&model, &o.as_ref().expect("loaded").embeddings)).collect::<Result<_>>()?;
            clean_scores.push(id.clone());
            models.push(model);
            (id, ood)
        };
        for (o, scores) in cfg.ood_sets.iter().zip(ood_scores) {
            let r = detection(&id_scores, scores, &format!("{method} on {}", o.name))?;
            report.rows.push(ReportRow { method: method.to_string(), dataset: o.name.clone(), report: r });
        }
    }

    report.provenance.push(("config_sha256".into(), cfg.config_hash.clone()));
    report.provenance.push(("seed".into(), cfg.seed.to_string()));
    report.provenance.push(("toolkit_version".into(), TOOLKIT_VERSION.into()));
    if density_methods.contains(&Method::Gmm) {
        let comps = if cfg.gmm.bic { "bic".to_string() } else { cfg.gmm.components.to_string() };
        report.provenance.push(("gmm_components".into(), comps));
    }
    if density_methods.contains(&Method::Knn) {
        report.provenance.push(("knn_k".into(), cfg.knn.k.to_string()));
    }

    if let Some(sweep) = &cfg.sweep {
        let specs = sweep_specs(cfg, sweep)?;
        report.provenance.push(("sweep_base_seed".into(), specs[0].seed.to_string()));
        let corrupted: Vec<EmbeddingSet> = match sweep.encoder {
            SweepEncoder::Toy => {
                let images = test
                    .as_ref()
                    .and_then(|t| t.images.as_ref())
                    .ok_or_else(|| Error::Config("toy-encoder sweeps need id_test to be an image directory".into()))?;
                let depths = match (&cfg.id_test.depth, sweep.kind) {
                    (Some(dir), CorruptionKind::Fog) => Some(load_depths(dir, images)?),
                    _ => None,
                };
                if sweep.kind == CorruptionKind::Fog {
                    let src = if depths.is_some() { "depth_maps" } else { "ramp_300m_to_5m" };
                    report.provenance.push(("fog_depth".into(), src.into()));
                    report.provenance.push(("atmospheric_light".into(), sweep.atmospheric_light.to_string()));
                }
                specs.iter().map(|s| corrupt_and_encode(images, depths.as_deref(), s, grid)).collect::<Result<_>>()?
            }
            SweepEncoder::External => {
                if sweep.embeddings.len() != specs.len()
                    || sweep.embeddings.iter().zip(&specs).any(|(e, s)| (e.severity - s.severity).abs() > 1e-12)
                {
                    return Err(Error::Config("sweep embeddings must list exactly the grid severities, in order".into()));
                }
                let train_set = &train.as_ref().expect("density methods present").embeddings;
                let mut sets = Vec::new();
                for e in &sweep.embeddings {
                    let set = load_embeddings(&e.path, EmbeddingFormat::from_path(&e.path))?;
                    check_dim(train_set, &set, &format!("sweep@{}", e.severity))?;
                    sets.push(set);
                }
                sets
            }
        };
        let outcome = evaluate_sweep(&models, &clean_scores, &specs, &corrupted)?;
        report.sweep_rows = outcome.rows;
        report.correlations = outcome.correlations;
    }
    Ok(report)
}
