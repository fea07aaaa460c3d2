//! Synthetic data for self-contained runs: Gaussian embedding benchmarks
//! and procedurally drawn road scenes.

use std::path::{Path, PathBuf};

use cornercase_core::corruption::{apply_fog, Preset, DEFAULT_ATMOSPHERIC_LIGHT};
use cornercase_core::rng::{derive_seed, seeded, ChaCha8Rng};
use cornercase_core::{DepthMap, EmbeddingSet, EmbeddingVector, ImageBuffer};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{BenchConfig, DatasetManifest, EncoderParams, GmmParams, KnnParams, RawConfig, RawSweep, Role, SweepEncoder, CONFIG_SCHEMA};
use crate::embed_io::{save_embeddings, EmbeddingFormat};
use crate::error::{write_file, Error, Result};
use crate::image_io::{write_depth_png, write_rgb_png};

pub const CONFIG_NAME: &str = "config.toml";

/// Side of the flattened uncertainty maps written by the embedding synth.
const UNC_SIDE: usize = 16;

fn normal_vec(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(r)).collect()
}

fn gaussian_set(r: &mut ChaCha8Rng, prefix: &str, n: usize, offset: &[f64]) -> Result<EmbeddingSet> {
    let records = (0..n)
        .map(|i| {
            let v = normal_vec(r, offset.len()).iter().zip(offset).map(|(z, o)| z + o).collect();
            EmbeddingVector::new(format!("{prefix}-{i:05}"), v)
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok(EmbeddingSet::new(records)?)
}

/// Flattened uncertainty maps whose per-map level is `0.3 + 0.05·(z + shift)`
/// with small per-pixel jitter, so the mean-uncertainty score separates the
/// sides by the same number of standard deviations as the embeddings.
fn uncertainty_set(r: &mut ChaCha8Rng, prefix: &str, n: usize, shift: f64) -> Result<EmbeddingSet> {
    let records = (0..n)
        .map(|i| {
            let z: f64 = StandardNormal.sample(r);
            let level = 0.3 + 0.05 * (z + shift.min(12.0));
            let v = (0..UNC_SIDE * UNC_SIDE)
                .map(|_| {
                    let j: f64 = StandardNormal.sample(r);
                    (level + 0.02 * j).clamp(0.0, 1.0)
                })
                .collect();
            EmbeddingVector::new(format!("{prefix}-{i:05}"), v)
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok(EmbeddingSet::new(records)?)
}

fn manifest(name: &str, role: Role, path: &str, uncertainty: Option<&str>) -> DatasetManifest {
    let mut m = DatasetManifest::new(name, role, path);
    m.uncertainty = uncertainty.map(PathBuf::from);
    m
}

/// Writes a Gaussian benchmark into `out_dir` and returns its config.
///
/// ID train and test are standard normal in `dim` dimensions; the single
/// OOD set is shifted by `shift` along a random unit direction. Each
/// split also gets uncertainty maps so all three methods can run.
pub fn generate_synthetic_benchmark(out_dir: &Path, dim: usize, n_train: usize, n_test: usize, shift: f64, seed: u64) -> Result<BenchConfig> {
    if dim == 0 || n_train < 2 || n_test < 2 {
        return Err(Error::Config("synthetic benchmark needs dim ≥ 1 and at least 2 samples per split".into()));
    }
    if !(shift.is_finite() && shift >= 0.0) {
        return Err(Error::Config(format!("shift must be finite and non-negative, got {shift}")));
    }
    let mut r = seeded(seed);
    let mut dir = normal_vec(&mut r, dim);
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    dir.iter_mut().for_each(|v| *v *= shift / norm);

    let zero = vec![0.0; dim];
    let bin = EmbeddingFormat::Binary;
    save_embeddings(&gaussian_set(&mut r, "train", n_train, &zero)?, &out_dir.join("id_train.bin"), bin)?;
    save_embeddings(&gaussian_set(&mut r, "test", n_test, &zero)?, &out_dir.join("id_test.bin"), bin)?;
    save_embeddings(&gaussian_set(&mut r, "ood", n_test, &dir)?, &out_dir.join("ood.bin"), bin)?;
    save_embeddings(&uncertainty_set(&mut r, "test", n_test, 0.0)?, &out_dir.join("id_test_unc.bin"), bin)?;
    save_embeddings(&uncertainty_set(&mut r, "ood", n_test, shift)?, &out_dir.join("ood_unc.bin"), bin)?;

    let raw = RawConfig {
        schema: CONFIG_SCHEMA,
        seed,
        methods: vec!["gmm".into(), "knn".into(), "mean_uncertainty".into()],
        gmm: GmmParams::default(),
        knn: KnnParams { k: KnnParams::default().k.min(n_train) },
        encoder: EncoderParams::default(),
        id_train: manifest("id_train", Role::IdTrain, "id_train.bin", None),
        id_test: manifest("id_test", Role::IdTest, "id_test.bin", Some("id_test_unc.bin")),
        ood: vec![manifest("synthetic_shift", Role::Ood, "ood.bin", Some("ood_unc.bin"))],
        sweep: None,
    };
    write_config(out_dir, &raw)
}

fn write_config(out_dir: &Path, raw: &RawConfig) -> Result<BenchConfig> {
    let path = out_dir.join(CONFIG_NAME);
    write_file(&path, raw.to_toml().as_bytes())?;
    BenchConfig::load(&path)
}

/// Knobs for [`road_scene`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub height: usize,
    pub width: usize,
    /// Upper bound of the per-image natural haze coefficient (per metre),
    /// drawn uniformly from `[0, haze_max]`.
    pub haze_max: f64,
}

impl SceneParams {
    /// Clear weather: sky is overexposed and clips to white.
    pub fn clear() -> Self {
        Self { height: 64, width: 128, haze_max: 0.0 }
    }

    /// Same scenes under varying natural haze, so light synthetic fog
    /// overlaps with the clean distribution.
    pub fn hazy() -> Self {
        Self { haze_max: 0.008, ..Self::clear() }
    }
}

/// Depth in metres of road row `row` for a horizon at `horizon`: flat
/// ground seen by a pinhole camera, 5 m at the bottom edge, capped at
/// 300 m.
fn ground_depth(row: usize, horizon: usize, height: usize) -> f64 {
    let below = (row as f64 - horizon as f64 + 0.5).max(1e-3);
    let bottom = (height - 1) as f64 - horizon as f64 + 0.5;
    (5.0 * bottom / below).min(300.0)
}

/// One procedural road scene and its depth map, fully determined by `seed`.
///
/// Overexposed sky, a band of buildings or trees at the horizon, a road
/// trapezoid with dashed centre markings, verges, and a few cars with
/// black shadows. Exposure, horizon, layout and haze vary per seed.
pub fn road_scene(p: &SceneParams, seed: u64) -> Result<(ImageBuffer, DepthMap)> {
    let (h, w) = (p.height, p.width);
    if h < 8 || w < 8 {
        return Err(Error::Config("scenes need at least 8×8 pixels".into()));
    }
    let mut r = seeded(seed);
    let exposure: f64 = r.random_range(0.85..1.15);
    let horizon = ((h as f64) * r.random_range(0.38..0.48)) as usize;
    let band = ((h as f64) * r.random_range(0.08..0.18)) as usize;
    let vanish = (w as f64) * r.random_range(0.4..0.6);
    let road_half_bottom = (w as f64) * r.random_range(0.35..0.5);
    let road_grey: f64 = r.random_range(0.28..0.42);
    let verge = [r.random_range(0.15..0.35), r.random_range(0.3..0.5), r.random_range(0.1..0.25)];

    let mut px = vec![0.0; h * w * 3];
    let mut depth = vec![300.0; h * w];
    let set = |px: &mut Vec<f64>, row: usize, col: usize, rgb: [f64; 3]| {
        let i = (row * w + col) * 3;
        for c in 0..3 {
            px[i + c] = (rgb[c] * exposure).clamp(0.0, 1.0);
        }
    };

    for row in 0..horizon {
        for col in 0..w {
            set(&mut px, row, col, [1.3, 1.35, 1.5]);
        }
    }
    // Horizon band made of blocks of varying height and colour.
    let mut col = 0;
    while col < w {
        let bw = r.random_range(4..=w / 6);
        let top = horizon.saturating_sub(r.random_range(band / 2..=band.max(1)));
        let tone: f64 = r.random_range(0.15..0.5);
        let tint = [tone * r.random_range(0.8..1.2), tone, tone * r.random_range(0.8..1.2)];
        let d: f64 = r.random_range(120.0..300.0);
        for c in col..(col + bw).min(w) {
            for row in top..horizon {
                set(&mut px, row, c, tint);
                depth[row * w + c] = d;
            }
        }
        col += bw;
    }
    for row in horizon..h {
        let frac = (row - horizon) as f64 / (h - 1 - horizon).max(1) as f64;
        let half = road_half_bottom * frac.max(0.02);
        let d = ground_depth(row, horizon, h);
        for col in 0..w {
            let x = col as f64 + 0.5;
            let jitter: f64 = r.random_range(-0.02..0.02);
            let rgb = if (x - vanish).abs() <= half {
                let marking = (x - vanish).abs() <= (half * 0.03).max(0.5) && ((row as f64 + 4.0 * frac).floor() as usize / 3) % 2 == 0;
                if marking { [1.2, 1.2, 1.2] } else { [road_grey + jitter; 3] }
            } else {
                [verge[0] + jitter, verge[1] + jitter, verge[2] + jitter]
            };
            set(&mut px, row, col, rgb);
            depth[row * w + col] = d;
        }
    }
    for _ in 0..r.random_range(0..=3) {
        let base = r.random_range(horizon + 2..h);
        let frac = (base - horizon) as f64 / (h - 1 - horizon).max(1) as f64;
        let cw = ((w as f64) * 0.25 * frac).max(2.0) as usize;
        let ch = (cw as f64 * 0.6).max(1.0) as usize;
        let left = ((vanish + r.random_range(-0.8..0.8) * road_half_bottom * frac) as isize - cw as isize / 2).clamp(0, (w - cw) as isize) as usize;
        let color = [r.random_range(0.05..0.9), r.random_range(0.05..0.9), r.random_range(0.05..0.9)];
        let d = ground_depth(base, horizon, h);
        for row in base.saturating_sub(ch)..base {
            for c in left..left + cw {
                set(&mut px, row, c, color);
                depth[row * w + c] = d;
            }
        }
        for c in left..left + cw {
            set(&mut px, base, c, [0.0; 3]);
        }
    }

    let img = ImageBuffer::new(h, w, px)?;
    let depth = DepthMap::new(h, w, depth, vec![true; h * w])?;
    let haze = if p.haze_max > 0.0 { r.random_range(0.0..p.haze_max) } else { 0.0 };
    let img = if haze > 0.0 { apply_fog(&img, &depth, haze, DEFAULT_ATMOSPHERIC_LIGHT)? } else { img };
    Ok((img, depth))
}

/// `n` scenes named `{prefix}-{i:05}.png`, seeded per index from `seed`.
pub fn road_scenes(p: &SceneParams, prefix: &str, n: usize, seed: u64) -> Result<(Vec<(String, ImageBuffer)>, Vec<DepthMap>)> {
    let mut images = Vec::with_capacity(n);
    let mut depths = Vec::with_capacity(n);
    for i in 0..n {
        let (img, d) = road_scene(p, derive_seed(seed, i as u64))?;
        images.push((format!("{prefix}-{i:05}.png"), img));
        depths.push(d);
    }
    Ok((images, depths))
}

/// Metres per unit in written depth PNGs.
pub const DEPTH_SCALE: f64 = 0.01;

/// Writes a hazy road-scene benchmark: train and test image directories,
/// test depth maps, an OOD directory of heavily fogged scenes, and a
/// config with a toy-encoder fog sweep over the fog preset.
pub fn generate_image_benchmark(out_dir: &Path, n_train: usize, n_test: usize, seed: u64) -> Result<BenchConfig> {
    if n_train < 2 || n_test < 2 {
        return Err(Error::Config("image benchmark needs at least 2 images per split".into()));
    }
    let p = SceneParams::hazy();
    let (train, _) = road_scenes(&p, "train", n_train, derive_seed(seed, 0))?;
    let (test, test_depth) = road_scenes(&p, "test", n_test, derive_seed(seed, 1))?;
    let (ood, ood_depth) = road_scenes(&p, "ood", n_test, derive_seed(seed, 2))?;
    for (name, img) in &train {
        write_rgb_png(&out_dir.join("id_train").join(name), img)?;
    }
    for ((name, img), d) in test.iter().zip(&test_depth) {
        write_rgb_png(&out_dir.join("id_test").join(name), img)?;
        write_depth_png(&out_dir.join("id_test_depth").join(name), d, DEPTH_SCALE)?;
    }
    for ((name, img), d) in ood.iter().zip(&ood_depth) {
        write_rgb_png(&out_dir.join("ood_fog").join(name), &apply_fog(img, d, 0.03, DEFAULT_ATMOSPHERIC_LIGHT)?)?;
    }
    let mut id_test = DatasetManifest::new("id_test", Role::IdTest, "id_test");
    id_test.depth = Some(PathBuf::from("id_test_depth"));
    let raw = RawConfig {
        schema: CONFIG_SCHEMA,
        seed,
        methods: vec!["gmm".into(), "knn".into()],
        gmm: GmmParams::default(),
        knn: KnnParams { k: KnnParams::default().k.min(n_train) },
        encoder: EncoderParams::default(),
        id_train: DatasetManifest::new("id_train", Role::IdTrain, "id_train"),
        id_test,
        ood: vec![DatasetManifest::new("heavy_fog", Role::Ood, "ood_fog")],
        sweep: Some(RawSweep {
            kind: "fog".into(),
            preset: Some(Preset::FogPaper.name().into()),
            grid: None,
            encoder: SweepEncoder::Toy,
            atmospheric_light: None,
            embeddings: Vec::new(),
        }),
    };
    write_config(out_dir, &raw)
}
