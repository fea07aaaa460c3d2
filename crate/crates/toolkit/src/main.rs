use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cornercase::bench::{fit_method, load_split, run_benchmark, BenchReport, ReportRow};
use cornercase::config::{BenchConfig, EncoderParams, GmmParams, KnnParams};
use cornercase::error::{Error, Result};
use cornercase::export::{project, write_points};
use cornercase::image_io::{file_name, list_pngs, read_depth_png, read_pixel_score_map, read_rgb_png, write_rgb_png};
use cornercase::model_io::{persist_model, restore_model};
use cornercase::report::{emit_report, parse_report, ReportFormat};
use cornercase::scores_io::{labeled_scores, read_scores, write_scores, Label, ScoreLine};
use cornercase::sweep::{run_sweep, SweepRequest};
use cornercase::synth::{generate_image_benchmark, generate_synthetic_benchmark};
use cornercase_core::corruption::{CorruptionKind, CorruptionSpec, Preset, SeverityGrid, DEFAULT_ATMOSPHERIC_LIGHT};
use cornercase_core::metrics::{pixel_average_precision, pixel_fpr_at_tpr, DetectionReport, DEFAULT_TPR};
use cornercase_core::stats::pca_fit;
use cornercase_core::Method;

#[derive(Parser)]
#[command(name = "cornercase", version, about = "Latent-space corner-case detection toolkit")]
struct Cli {
    /// Benchmark config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, default_value = "csv")]
    format: ReportFormat,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Encoding {
    /// Toy-encoder grid used when an input is a PNG directory.
    #[arg(long, default_value_t = EncoderParams::default().grid)]
    grid: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a diagonal GMM on ID training embeddings.
    FitGmm {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = GmmParams::default().components)]
        components: usize,
        #[arg(long, default_value_t = GmmParams::default().max_iters)]
        max_iters: usize,
        #[arg(long, default_value_t = GmmParams::default().tol)]
        tol: f64,
        /// Choose the component count by BIC.
        #[arg(long)]
        bic: bool,
        #[command(flatten)]
        enc: Encoding,
    },
    /// Build an exact k-NN index on ID training embeddings.
    FitKnn {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, default_value_t = KnnParams::default().k)]
        k: usize,
        #[command(flatten)]
        enc: Encoding,
    },
    /// Score embeddings with a saved model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Label written next to each score.
        #[arg(long, value_parser = parse_label, default_value = "id")]
        label: Label,
        #[command(flatten)]
        enc: Encoding,
    },
    /// Detection metrics from score files, or pixel metrics from maps.
    Eval {
        /// Score files (JSON lines with id/ood labels); concatenated.
        #[arg(long, num_args = 1..)]
        scores: Vec<PathBuf>,
        /// Directory of 16-bit anomaly score PNGs (pixel mode).
        #[arg(long, requires = "ground_truth")]
        pixel_scores: Option<PathBuf>,
        /// Directory of ground-truth PNGs (0 negative, 255 positive, else ignored).
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Corrupt one image.
    Corrupt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kind: CorruptionKind,
        #[arg(long)]
        severity: f64,
        #[arg(long)]
        depth: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ATMOSPHERIC_LIGHT)]
        atmospheric_light: f64,
    },
    /// Corrupt a directory over a severity grid.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        kind: CorruptionKind,
        /// fog-paper, noise-paper or whitebox-paper.
        #[arg(long, conflicts_with = "grid")]
        preset: Option<Preset>,
        /// Explicit comma-separated severities.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        depth: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ATMOSPHERIC_LIGHT)]
        atmospheric_light: f64,
    },
    /// Fit PCA on the first input and export coordinates for all inputs.
    Pca {
        /// `name=path` pairs; the first one is the fitting set.
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<String>,
        #[arg(long, default_value_t = 2)]
        components: usize,
        #[command(flatten)]
        enc: Encoding,
    },
    /// Write a synthetic benchmark and its config.
    Synth {
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        n_train: usize,
        #[arg(long, default_value_t = 500)]
        n_test: usize,
        #[arg(long, default_value_t = 6.0)]
        shift: f64,
        /// Road-scene images with a fog sweep instead of Gaussian embeddings.
        #[arg(long)]
        images: bool,
    },
    /// Run a benchmark config.
    Bench,
    /// Re-render a saved report in another format.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Format of the input; defaults to the file extension.
        #[arg(long)]
        from: Option<ReportFormat>,
    },
}

fn parse_label(s: &str) -> std::result::Result<Label, String> {
    match s {
        "id" => Ok(Label::Id),
        "ood" => Ok(Label::Ood),
        _ => Err(format!("unknown label {s:?} (expected id or ood)")),
    }
}

fn need<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    v.as_deref().ok_or_else(|| Error::Config(format!("--{flag} is required for this command")))
}

/// Writes `text` to `--out` when given, else prints it.
fn output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io { path: p.clone(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fit_config(seed: u64, gmm: GmmParams, knn: KnnParams) -> BenchConfig {
    BenchConfig {
        seed,
        methods: Vec::new(),
        gmm,
        knn,
        encoder: EncoderParams::default(),
        id_train: cornercase::config::DatasetManifest::new("-", cornercase::config::Role::IdTrain, "-"),
        id_test: cornercase::config::DatasetManifest::new("-", cornercase::config::Role::IdTest, "-"),
        ood_sets: Vec::new(),
        sweep: None,
        config_hash: String::new(),
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.cmd {
        Cmd::FitGmm { train, components, max_iters, tol, bic, enc } => {
            let set = load_split(&train, enc.grid)?.embeddings;
            let cfg = fit_config(seed, GmmParams { components, max_iters, tol, bic }, KnnParams::default());
            persist_model(&fit_method(Method::Gmm, &set, &cfg)?, need(&cli.out, "out")?)
        }
        Cmd::FitKnn { train, k, enc } => {
            let set = load_split(&train, enc.grid)?.embeddings;
            let cfg = fit_config(seed, GmmParams::default(), KnnParams { k });
            persist_model(&fit_method(Method::Knn, &set, &cfg)?, need(&cli.out, "out")?)
        }
        Cmd::Score { model, input, label, enc } => {
            let model = restore_model(&model)?;
            let set = load_split(&input, enc.grid)?.embeddings;
            if set.dim() != model.dim() {
                return Err(Error::Data(format!("embeddings have dimension {} but the model expects {}", set.dim(), model.dim())));
            }
            let lines = set.iter().map(|z| Ok(ScoreLine::from_record(&model.score(z)?, label))).collect::<Result<Vec<_>>>()?;
            match &cli.out {
                Some(p) => write_scores(p, &lines),
                None => output(&None, &cornercase::scores_io::encode_scores(&lines)),
            }
        }
        Cmd::Eval { scores, pixel_scores, ground_truth } => {
            if let (Some(sd), Some(gd)) = (pixel_scores, ground_truth) {
                let mut text = String::from("image,ap,fpr_at_95\n");
                for p in list_pngs(&sd)? {
                    let map = read_pixel_score_map(&p, &gd.join(file_name(&p)))?;
                    let ap = pixel_average_precision(&map)?;
                    let fpr = pixel_fpr_at_tpr(&map, DEFAULT_TPR)?;
                    text.push_str(&format!("{},{ap:.2},{fpr:.2}\n", file_name(&p)));
                }
                return output(&cli.out, &text);
            }
            if scores.is_empty() {
                return Err(Error::Config("eval needs --scores or --pixel-scores with --ground-truth".into()));
            }
            let mut lines = Vec::new();
            for s in &scores {
                lines.extend(read_scores(s)?);
            }
            let method = lines.iter().find_map(|l| l.method.clone()).unwrap_or_else(|| "unknown".into());
            let report = BenchReport {
                rows: vec![ReportRow {
                    method,
                    dataset: file_name(&scores[0]),
                    report: DetectionReport::compute(&labeled_scores(&lines)?)?,
                }],
                ..Default::default()
            };
            output(&cli.out, &emit_report(&report, cli.format))
        }
        Cmd::Corrupt { input, kind, severity, depth, atmospheric_light } => {
            let img = read_rgb_png(&input)?;
            let depth = depth.map(|d| read_depth_png(&d)).transpose()?;
            let spec = CorruptionSpec { kind, severity, seed, atmospheric_light };
            let out = spec.apply(&img, depth.as_ref()).map_err(|e| Error::Config(e.to_string()))?;
            write_rgb_png(need(&cli.out, "out")?, &out)
        }
        Cmd::Sweep { input, kind, preset, grid, depth, atmospheric_light } => {
            let grid = match (preset, grid) {
                (Some(p), _) => SeverityGrid::Preset(p),
                (None, Some(g)) => SeverityGrid::Explicit(g),
                (None, None) => return Err(Error::Config("sweep needs --preset or --grid".into())),
            };
            let req = SweepRequest {
                input: &input,
                depth: depth.as_deref(),
                kind,
                grid,
                base_seed: seed,
                atmospheric_light,
                out: need(&cli.out, "out")?,
            };
            let manifest = run_sweep(&req)?;
            eprintln!("wrote {} images", manifest.entries.len());
            Ok(())
        }
        Cmd::Pca { input, components, enc } => {
            let mut sets = Vec::new();
            for spec in &input {
                let (name, path) = spec.split_once('=').unwrap_or((spec.as_str(), spec.as_str()));
                sets.push((name.to_string(), load_split(Path::new(path), enc.grid)?.embeddings));
            }
            let model = pca_fit(&sets[0].1, components)?;
            let mut points = Vec::new();
            for (name, set) in &sets {
                points.extend(project(&model, name, set)?);
            }
            write_points(need(&cli.out, "out")?, &points)
        }
        Cmd::Synth { dim, n_train, n_test, shift, images } => {
            let out = need(&cli.out, "out")?;
            if images {
                generate_image_benchmark(out, n_train, n_test, seed)?;
            } else {
                generate_synthetic_benchmark(out, dim, n_train, n_test, shift, seed)?;
            }
            Ok(())
        }
        Cmd::Bench => {
            let mut cfg = BenchConfig::load(need(&cli.config, "config")?)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            output(&cli.out, &emit_report(&run_benchmark(&cfg)?, cli.format))
        }
        Cmd::Report { input, from } => {
            let from = from.unwrap_or(match input.extension().and_then(|e| e.to_str()) {
                Some("md") => ReportFormat::Markdown,
                _ => ReportFormat::Csv,
            });
            let text = std::fs::read_to_string(&input).map_err(|e| Error::Io { path: input.clone(), source: e })?;
            output(&cli.out, &emit_report(&parse_report(&text, from, &input)?, cli.format))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
