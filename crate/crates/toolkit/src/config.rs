//! Benchmark configuration files (TOML, versioned by a `schema` field).

use std::path::{Path, PathBuf};

use cornercase_core::corruption::{CorruptionKind, Preset, SeverityGrid, DEFAULT_ATMOSPHERIC_LIGHT};
use cornercase_core::density::gmm::GmmConfig;
use cornercase_core::density::knn::DEFAULT_K;
use cornercase_core::encoder::DEFAULT_GRID;
use cornercase_core::Method;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{read_file, Error, Result};

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    IdTrain,
    IdTest,
    Ood,
}

/// One dataset split. `path` is an embedding file or a directory of PNG
/// images (encoded with the toy encoder). `uncertainty` is an embedding
/// file of flattened maps or a directory of 16-bit PNG maps, used by the
/// mean-uncertainty method. `depth` is a directory of 16-bit depth PNGs
/// named like the images, used by fog sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn new(name: impl Into<String>, role: Role, path: impl Into<PathBuf>) -> Self {
        Self { name: name.into(), role: Some(role), path: Some(path.into()), uncertainty: None, depth: None }
    }

    fn check(&mut self, role: Role, base: &Path) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("dataset name must not be empty".into()));
        }
        match self.role {
            Some(r) if r != role => {
                return Err(Error::Config(format!("dataset {:?} declares role {r:?} but is listed as {role:?}", self.name)))
            }
            _ => self.role = Some(role),
        }
        if self.path.is_none() && self.uncertainty.is_none() {
            return Err(Error::Config(format!("dataset {:?} has neither a path nor an uncertainty source", self.name)));
        }
        for p in [&mut self.path, &mut self.uncertainty, &mut self.depth].into_iter().flatten() {
            if p.as_os_str().is_empty() {
                return Err(Error::Config(format!("dataset {:?} has an empty path", self.name)));
            }
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmmParams {
    pub components: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Select the component count by BIC over {1, 2, 4, 8}.
    pub bic: bool,
}

impl Default for GmmParams {
    fn default() -> Self {
        let d = GmmConfig::default();
        Self { components: d.components, max_iters: d.max_iters, tol: d.tol, bic: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderParams {
    pub grid: usize,
}

impl Default for EncoderParams {
    fn default() -> Self {
        Self { grid: DEFAULT_GRID }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepEncoder {
    Toy,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEmbeddings {
    pub severity: f64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    pub encoder: SweepEncoder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atmospheric_light: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embeddings: Vec<SweepEmbeddings>,
}

/// On-disk shape of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema: u32,
    #[serde(default)]
    pub seed: u64,
    pub methods: Vec<String>,
    #[serde(default)]
    pub gmm: GmmParams,
    #[serde(default)]
    pub knn: KnnParams,
    #[serde(default)]
    pub encoder: EncoderParams,
    pub id_train: DatasetManifest,
    pub id_test: DatasetManifest,
    #[serde(default)]
    pub ood: Vec<DatasetManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<RawSweep>,
}

impl RawConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: CorruptionKind,
    pub grid: SeverityGrid,
    pub encoder: SweepEncoder,
    pub atmospheric_light: f64,
    pub embeddings: Vec<SweepEmbeddings>,
}

/// Validated benchmark configuration with absolute paths.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub methods: Vec<Method>,
    pub gmm: GmmParams,
    pub knn: KnnParams,
    pub encoder: EncoderParams,
    pub id_train: DatasetManifest,
    pub id_test: DatasetManifest,
    pub ood_sets: Vec<DatasetManifest>,
    pub sweep: Option<SweepConfig>,
    /// SHA-256 of the config text, hex.
    pub config_hash: String,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        match table.get("schema") {
            None => return Err(Error::Config("missing `schema` field".into())),
            Some(toml::Value::Integer(v)) if *v > i64::from(CONFIG_SCHEMA) => {
                return Err(Error::Config(format!(
                    "config schema {v} is newer than the supported schema {CONFIG_SCHEMA}"
                )))
            }
            Some(toml::Value::Integer(v)) if *v == i64::from(CONFIG_SCHEMA) => {}
            Some(other) => return Err(Error::Config(format!("unsupported config schema {other}"))),
        }
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        Self::from_raw(raw, base, hash)
    }

    pub fn from_raw(raw: RawConfig, base: &Path, config_hash: String) -> Result<Self> {
        if raw.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        let mut methods = Vec::new();
        for m in &raw.methods {
            let m: Method = m.parse().map_err(|e: cornercase_core::Error| Error::Config(e.to_string()))?;
            if methods.contains(&m) {
                return Err(Error::Config(format!("method {m} listed twice")));
            }
            methods.push(m);
        }
        if raw.ood.is_empty() {
            return Err(Error::Config("at least one OOD dataset is required".into()));
        }
        if raw.gmm.components == 0 || raw.gmm.max_iters == 0 || !(raw.gmm.tol > 0.0) {
            return Err(Error::Config("gmm components, max_iters and tol must be positive".into()));
        }
        if raw.knn.k == 0 {
            return Err(Error::Config("knn k must be positive".into()));
        }
        if raw.encoder.grid == 0 {
            return Err(Error::Config("encoder grid must be positive".into()));
        }
        let mut id_train = raw.id_train;
        id_train.check(Role::IdTrain, base)?;
        let mut id_test = raw.id_test;
        id_test.check(Role::IdTest, base)?;
        let mut ood_sets = raw.ood;
        for o in &mut ood_sets {
            o.check(Role::Ood, base)?;
        }
        let mut names: Vec<&str> = ood_sets.iter().map(|o| o.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("OOD dataset names must be unique".into()));
        }
        for m in &methods {
            let needs_path = *m != Method::MeanUncertainty;
            for d in std::iter::once(&id_test).chain(&ood_sets).chain(needs_path.then_some(&id_train)) {
                let present = if needs_path { d.path.is_some() } else { d.uncertainty.is_some() };
                if !present {
                    let field = if needs_path { "path" } else { "uncertainty" };
                    return Err(Error::Config(format!("method {m} needs `{field}` on dataset {:?}", d.name)));
                }
            }
        }
        let sweep = raw.sweep.map(|s| parse_sweep(s, base, &methods)).transpose()?;
        Ok(Self {
            seed: raw.seed,
            methods,
            gmm: raw.gmm,
            knn: raw.knn,
            encoder: raw.encoder,
            id_train,
            id_test,
            ood_sets,
            sweep,
            config_hash,
        })
    }

    pub fn gmm_config(&self) -> GmmConfig {
        GmmConfig { components: self.gmm.components, seed: self.seed, max_iters: self.gmm.max_iters, tol: self.gmm.tol }
    }
}

fn parse_sweep(s: RawSweep, base: &Path, methods: &[Method]) -> Result<SweepConfig> {
    let cfg_err = |e: cornercase_core::Error| Error::Config(e.to_string());
    let kind: CorruptionKind = s.kind.parse().map_err(cfg_err)?;
    let grid = match (s.preset, s.grid) {
        (Some(p), None) => SeverityGrid::Preset(p.parse::<Preset>().map_err(cfg_err)?),
        (None, Some(g)) => SeverityGrid::Explicit(g),
        _ => return Err(Error::Config("sweep needs exactly one of `preset` or `grid`".into())),
    };
    if !methods.iter().any(|m| *m != Method::MeanUncertainty) {
        return Err(Error::Config("a sweep needs the gmm or knn method".into()));
    }
    let atmospheric_light = s.atmospheric_light.unwrap_or(DEFAULT_ATMOSPHERIC_LIGHT);
    let mut embeddings = s.embeddings;
    for e in &mut embeddings {
        if e.path.is_relative() {
            e.path = base.join(&e.path);
        }
    }
    match s.encoder {
        SweepEncoder::Toy if !embeddings.is_empty() => {
            return Err(Error::Config("sweep embeddings are only used with encoder = \"external\"".into()))
        }
        SweepEncoder::External if embeddings.is_empty() => {
            return Err(Error::Config("external sweep needs one [[sweep.embeddings]] entry per severity".into()))
        }
        _ => {}
    }
    Ok(SweepConfig { kind, grid, encoder: s.encoder, atmospheric_light, embeddings })
}
