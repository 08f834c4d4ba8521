mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use transcore::config::{DistortionGrid, Manifest, RunConfig};
use transcore::distort::DistortionKind;
use transcore::encoder::build_encoder;
use transcore::image::load_png;
use transcore::metrics::Metric;
use transcore::score::render_heatmap;
use transcore::sweep::{
    correlate, fmt6, read_records, reports_json, run_batch, run_sweep, write_records, MetricSuite,
    SweepOptions, SweepRecord,
};
use transcore::synth::write_corpus;
use transcore::{samscore, EmbedKey, EncoderSpec, Error, ErrorClass, Result, Role};

/// Structure-preservation scoring for image translation.
#[derive(Parser)]
#[command(name = "transcore", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one source/translated image pair.
    Score(ScoreArgs),
    /// Score every manifest pair undistorted with each metric.
    Batch(BatchArgs),
    /// Distort translations over a degree grid and score every cell.
    Sweep(SweepArgs),
    /// Correlate metric values with distortion degree.
    Correlate(CorrelateArgs),
    /// Plot percent change versus degree per task and distortion.
    Report(ReportArgs),
    /// Write a synthetic pair corpus and its manifest.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ScoreArgs {
    source: PathBuf,
    translated: PathBuf,
    /// stub | onnx:<model.onnx> | precomputed:<dir>
    #[arg(long, default_value = "stub")]
    encoder: String,
    /// Write the similarity map as a grayscale PNG.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// Embedding lookup name for precomputed backends; defaults to the
    /// source file stem.
    #[arg(long)]
    pair_id: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// JSON run config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated metric names.
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<Metric>>,
    /// SAMScore encoder URI.
    #[arg(long)]
    encoder: Option<String>,
    /// ViTScore encoder URI.
    #[arg(long)]
    vit_encoder: Option<String>,
    /// LPIPS ONNX model.
    #[arg(long)]
    lpips_model: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Records CSV path; defaults to a file in the configured output dir.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Distortion kinds to sweep; replaces the config's grids.
    #[arg(long, value_delimiter = ',')]
    distortion: Vec<DistortionKind>,
    /// Comma-separated degrees applied to every swept distortion.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<f64>>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds_per_degree: Option<usize>,
    /// Fixed-magnitude color jitter instead of sampled factors.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct CorrelateArgs {
    records: PathBuf,
    /// Correlate individual records rather than per-degree means.
    #[arg(long)]
    pooled: bool,
    /// JSON output path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Records files; each file stem names a task.
    #[arg(required = true)]
    records: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    out_dir: PathBuf,
    #[arg(long)]
    pooled: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Input => 2,
        ErrorClass::Io => 3,
        ErrorClass::Backend => 4,
        ErrorClass::Config => 5,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Score(a) => cmd_score(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Report(a) => report::run(&a.records, &a.out_dir, a.pooled),
        Command::Synth(a) => cmd_synth(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let spec = EncoderSpec::parse(&a.encoder)?;
    let src = load_png(&a.source)?;
    let gen = load_png(&a.translated)?;
    let pair_id = match a.pair_id {
        Some(id) => id,
        None => file_stem(&a.source),
    };
    let enc = build_encoder(&spec)?;
    let x = enc.embed(&src, Some(&EmbedKey::new(pair_id.clone(), Role::Src)))?;
    let y = enc.embed(&gen, Some(&EmbedKey::new(pair_id, Role::Gen)))?;
    let res = samscore(&x, &y)?;
    if let Some(path) = &a.heatmap {
        render_heatmap(&res.map, path)?;
    }
    println!("SAMScore={}", fmt6(res.score));
    Ok(())
}

/// Config file (or defaults) with command-line overrides applied.
fn run_config(a: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &a.metrics {
        cfg.metrics = m.clone();
    }
    if let Some(uri) = &a.encoder {
        cfg.encoders.samscore = Some(EncoderSpec::parse(uri)?);
    }
    if let Some(uri) = &a.vit_encoder {
        cfg.encoders.vitscore =
            Some(EncoderSpec::parse_with(uri, transcore::encoder::ModelPreset::Vit)?);
    }
    if let Some(p) = &a.lpips_model {
        cfg.encoders.lpips = Some(EncoderSpec::OnnxModel {
            model_path: p.clone(),
            expected_shape: None,
            preprocess: Default::default(),
        });
    }
    if let Some(j) = a.jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn output_path(a: &RunArgs, cfg: &RunConfig, default_name: &str) -> PathBuf {
    a.out.clone().unwrap_or_else(|| cfg.output_dir.join(default_name))
}

fn write_out(records: &[SweepRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_records(records, path)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    info!("wrote {} records ({failed} failed) to {}", records.len(), path.display());
    if failed > 0 {
        log::warn!("{failed} of {} records did not score", records.len());
    }
    Ok(())
}

fn cmd_batch(a: BatchArgs) -> Result<()> {
    let cfg = run_config(&a.run)?;
    let manifest = Manifest::load(&a.run.manifest)?;
    let suite = MetricSuite::from_config(&cfg)?;
    let records = run_batch(&manifest, &suite, cfg.jobs)?;
    write_out(&records, &output_path(&a.run, &cfg, "batch.csv"))
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = run_config(&a.run)?;
    if !a.distortion.is_empty() {
        cfg.distortions = a.distortion.iter().map(|&k| DistortionGrid::new(k)).collect();
    }
    for g in &mut cfg.distortions {
        if let Some(d) = &a.degrees {
            g.degrees = Some(d.clone());
        }
        g.deterministic |= a.deterministic;
    }
    if cfg.distortions.is_empty() {
        return Err(Error::Config("no distortions configured; pass --distortion".into()));
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = a.seeds_per_degree {
        cfg.seeds_per_degree = n;
    }
    cfg.validate()?;
    let manifest = Manifest::load(&a.run.manifest)?;
    let suite = MetricSuite::from_config(&cfg)?;
    let records = run_sweep(&manifest, &suite, &cfg.distortions, &SweepOptions::from(&cfg))?;
    write_out(&records, &output_path(&a.run, &cfg, "sweep.csv"))
}

fn cmd_correlate(a: CorrelateArgs) -> Result<()> {
    let records = read_records(&a.records)?;
    let reports: Vec<_> = correlate(&records, a.pooled).iter().map(|r| r.rounded()).collect();
    let json = reports_json(&reports);
    match &a.out {
        Some(p) => std::fs::write(p, json).map_err(|e| Error::io(p, e)),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let manifest = write_corpus(&a.out_dir, a.count, a.size, a.size, a.seed)?;
    println!("{}", a.out_dir.join("manifest.json").display());
    info!("wrote {} pairs", manifest.pairs.len());
    Ok(())
}

pub(crate) fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
