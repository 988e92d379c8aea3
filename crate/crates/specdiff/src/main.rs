//! `specdiff` command line: WAV -> SPEC1 spectrograms, quantile references,
//! scoring with explanations, split/tune protocols, and the synthetic
//! binomial-consistency experiment.
//!
//! The workflow is two-staged: `spectrogram` converts audio once per corpus,
//! every later stage consumes the stored SPEC1 files. Each command writes the
//! effective run configuration next to its outputs, and all outputs are
//! deterministic given the same inputs and configuration.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use specdiff::dataset::{self, DatasetManifest, Label, LayoutRule, ManifestEntry};
use specdiff::error::{Error, Result};
use specdiff::evaluation::make_splits;
use specdiff::formats;
use specdiff::scoring::{self, ExplanationFormat, Metric};
use specdiff::spectrogram::{compute_spectrogram, DbConfig, StftConfig};
use specdiff::synthetic::{self, PatchBenchmarkConfig, SyntheticSpec};
use specdiff::tuning::{run_protocol, GridConfig, SpectrogramStore};
use specdiff::wav::{decode_wav, select_channel};
use specdiff::{Spectrogram, SplitPlan};

/// Effective per-run configuration; overridable by `--config` and flags, and
/// serialized next to outputs for provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    stft: StftConfig,
    db: DbConfig,
    channel: usize,
    sample_rate: Option<u32>,
    z_grid: Vec<f64>,
    metrics: Vec<Metric>,
    seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = GridConfig::default();
        RunConfig {
            stft: StftConfig::default(),
            db: DbConfig::default(),
            channel: 0,
            sample_rate: None,
            z_grid: grid.z_grid,
            metrics: grid.metrics,
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

impl RunConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: RunConfig = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Error::UnreadablePath(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?
            }
            None => RunConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        self.db.validate()?;
        self.grid().validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must not be empty".into()));
        }
        Ok(())
    }

    fn grid(&self) -> GridConfig {
        GridConfig { z_grid: self.z_grid.clone(), metrics: self.metrics.clone() }
    }
}

#[derive(Parser)]
#[command(name = "specdiff", version, about = "Quantile-reference anomaly detection for sound spectrograms")]
struct Cli {
    /// JSON run configuration (stft, db, channel, z_grid, metrics, seeds).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for batch stages (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Seed override for commands that use a single seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute SPEC1 spectrograms from WAV input (single file or dataset).
    Spectrogram(SpectrogramArgs),
    /// Pool training spectrograms into a QREF1 reference.
    Fit(FitArgs),
    /// Score inputs against a reference; optionally export explanations.
    Score(ScoreArgs),
    /// Grid search + multi-seed split protocol over a labeled manifest.
    Tune(TuneArgs),
    /// Export a deterministic train/validation/test split plan as JSON.
    Split(SplitArgs),
    /// Binomial-consistency experiment on synthetic i.i.d. data.
    ValidateBinomial(ValidateBinomialArgs),
    /// Generate a synthetic patch-anomaly benchmark dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SpectrogramArgs {
    /// A single WAV file to convert.
    input: Option<PathBuf>,

    /// Dataset root (mimii layout) or manifest CSV to convert in batch.
    #[arg(long, conflicts_with = "input")]
    dataset: Option<PathBuf>,

    /// Dataset layout when --dataset is used.
    #[arg(long, default_value = "mimii")]
    layout: String,

    /// Channel to take from multi-channel input.
    #[arg(long)]
    channel: Option<usize>,

    /// Require this sample rate; mismatching files are an error.
    #[arg(long)]
    sample_rate: Option<u32>,

    /// Output SPEC1 file (single mode) or directory (batch mode).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// SPEC1/WAV files, directories of them, or a manifest CSV (only entries
    /// labeled normal are pooled from a manifest).
    inputs: Vec<PathBuf>,

    /// Quantile level z in [0, 1].
    #[arg(short, long)]
    z: f64,

    #[arg(long)]
    channel: Option<usize>,

    /// Output QREF1 file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// SPEC1/WAV files or directories of them.
    inputs: Vec<PathBuf>,

    /// Reference QREF1 file.
    #[arg(short, long)]
    reference: PathBuf,

    /// Metrics to report (comma separated; counting,sum,mean,binomial).
    #[arg(short, long, value_delimiter = ',')]
    metric: Option<Vec<Metric>>,

    #[arg(long)]
    channel: Option<usize>,

    /// Write one explanation per input into this directory.
    #[arg(long)]
    explain_dir: Option<PathBuf>,

    /// Explanation format: image (16-bit PGM) or matrix (SPEC1).
    #[arg(long, default_value = "image")]
    explain_format: String,

    /// Output CSV (path,metric,value,k,n,z,log_pmf). Defaults to stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    /// Manifest CSV listing SPEC1 files with labels.
    #[arg(long)]
    manifest: PathBuf,

    /// Seeds for the repeated split protocol (comma separated).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Quantile grid override (comma separated).
    #[arg(long, value_delimiter = ',')]
    z_grid: Option<Vec<f64>>,

    /// Metric grid override (comma separated).
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<Metric>>,

    /// Output directory for tuning_records.csv and grid_results.csv.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    /// Manifest CSV with labels.
    #[arg(long)]
    manifest: PathBuf,

    /// Output JSON plan.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ValidateBinomialArgs {
    #[arg(long, default_value_t = 100)]
    rows: usize,
    #[arg(long, default_value_t = 100)]
    cols: usize,
    #[arg(long, default_value_t = 2000)]
    train: usize,
    #[arg(long, default_value_t = 500)]
    test: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Quantile levels to test (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.75, 0.9, 0.95, 0.99])]
    z_list: Vec<f64>,
    /// Per-experiment split seeds (comma separated).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output CSV.
    #[arg(short, long)]
    output: PathBuf,
    /// Optional SVG plot of relative deviation vs z.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 64)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    cols: usize,
    #[arg(long, default_value_t = 500)]
    train: usize,
    #[arg(long, default_value_t = 100)]
    val_normal: usize,
    #[arg(long, default_value_t = 100)]
    val_anormal: usize,
    #[arg(long, default_value_t = 100)]
    test_normal: usize,
    #[arg(long, default_value_t = 100)]
    test_anormal: usize,
    #[arg(long, default_value_t = 8)]
    patch: usize,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Output directory (SPEC1 files + manifest.csv + split_plan.json).
    #[arg(short, long)]
    output: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{}: {e}", e.name());
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("--jobs: {e}")))?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    match cli.command {
        Command::Spectrogram(args) => cmd_spectrogram(args, cfg),
        Command::Fit(args) => cmd_fit(args, cfg),
        Command::Score(args) => cmd_score(args, cfg),
        Command::Tune(args) => cmd_tune(args, cfg, cli.seed),
        Command::Split(args) => cmd_split(args, cli.seed),
        Command::ValidateBinomial(args) => cmd_validate_binomial(args, cfg, cli.seed),
        Command::Synth(args) => cmd_synth(args, cfg, cli.seed),
    }
}

// ---------------------------------------------------------------- inputs

/// Decodes a WAV file and runs the preprocessing chain of `cfg`.
fn spectrogram_from_wav(path: &Path, cfg: &RunConfig) -> Result<Spectrogram> {
    let bytes =
        fs::read(path).map_err(|e| Error::UnreadablePath(format!("{}: {e}", path.display())))?;
    let clip = decode_wav(&bytes)?;
    if let Some(expected) = cfg.sample_rate {
        if clip.sample_rate != expected {
            return Err(Error::SampleRateMismatch { expected, found: clip.sample_rate });
        }
    }
    let signal = select_channel(&clip, cfg.channel)?;
    compute_spectrogram(signal, &path.to_string_lossy(), &cfg.stft, &cfg.db)
}

/// Loads one input by extension: `.spec` containers directly, `.wav` through
/// the preprocessing chain.
fn load_input(path: &Path, cfg: &RunConfig) -> Result<Spectrogram> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("spec") => formats::load_spectrogram(path),
        Some("wav") => spectrogram_from_wav(path, cfg),
        _ => Err(Error::UnreadablePath(format!(
            "{}: expected a .spec or .wav file",
            path.display()
        ))),
    }
}

/// Expands files/directories into a sorted list of spectrogram inputs.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            for item in walkdir::WalkDir::new(input).sort_by_file_name() {
                let item = item.map_err(|e| Error::UnreadablePath(e.to_string()))?;
                let p = item.path();
                if item.file_type().is_file() {
                    if let Some(ext) = p.extension().and_then(|e| e.to_str()) {
                        if ext.eq_ignore_ascii_case("spec") || ext.eq_ignore_ascii_case("wav") {
                            out.push(p.to_path_buf());
                        }
                    }
                }
            }
        } else {
            out.push(input.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset("no input files".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Writes the effective configuration next to an output file or directory.
fn write_run_config(output: &Path, cfg: &RunConfig) -> Result<()> {
    let path = if output.is_dir() {
        output.join("run_config.json")
    } else {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".run.json");
        output.with_file_name(name)
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, cfg)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- commands

fn cmd_spectrogram(args: SpectrogramArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(ch) = args.channel {
        cfg.channel = ch;
    }
    if args.sample_rate.is_some() {
        cfg.sample_rate = args.sample_rate;
    }

    match (&args.input, &args.dataset) {
        (Some(input), None) => {
            let spec = spectrogram_from_wav(input, &cfg)?;
            formats::save_spectrogram(&args.output, &spec)?;
            write_run_config(&args.output, &cfg)?;
            println!(
                "{} -> {} ({}x{})",
                input.display(),
                args.output.display(),
                spec.rows(),
                spec.cols()
            );
            Ok(())
        }
        (None, Some(dataset_path)) => {
            let layout: LayoutRule = args.layout.parse()?;
            let manifest = dataset::scan_dataset(dataset_path, layout)?;
            fs::create_dir_all(&args.output)?;
            let root = if dataset_path.is_dir() { Some(dataset_path.as_path()) } else { None };

            let entries: Vec<ManifestEntry> = manifest
                .entries
                .par_iter()
                .enumerate()
                .map(|(idx, entry)| -> Result<ManifestEntry> {
                    let input = Path::new(&entry.path);
                    let rel = root
                        .and_then(|r| input.strip_prefix(r).ok())
                        .map(|r| r.with_extension("spec"))
                        .unwrap_or_else(|| {
                            let stem = input.file_stem().unwrap_or_default().to_string_lossy();
                            PathBuf::from(format!("{idx:05}-{stem}.spec"))
                        });
                    let out_path = args.output.join(rel);
                    if let Some(parent) = out_path.parent() {
                        fs::create_dir_all(parent)?;
                    }
                    let spec = spectrogram_from_wav(input, &cfg)?;
                    formats::save_spectrogram(&out_path, &spec)?;
                    Ok(ManifestEntry { path: out_path.to_string_lossy().into_owned(), ..entry.clone() })
                })
                .collect::<Result<_>>()?;

            let converted = DatasetManifest::new(entries)?;
            let mut w = BufWriter::new(File::create(args.output.join("manifest.csv"))?);
            dataset::write_manifest_csv(&mut w, &converted)?;
            w.flush()?;
            write_run_config(&args.output, &cfg)?;
            println!("converted {} files into {}", converted.len(), args.output.display());
            Ok(())
        }
        _ => Err(Error::InvalidConfig("pass either a WAV file or --dataset".into())),
    }
}

fn cmd_fit(args: FitArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(ch) = args.channel {
        cfg.channel = ch;
    }
    if args.inputs.is_empty() {
        return Err(Error::EmptyInput("fit needs at least one input".into()));
    }

    // A single CSV manifest means "pool the normal entries".
    let paths: Vec<PathBuf> = if args.inputs.len() == 1
        && args.inputs[0].extension().and_then(|e| e.to_str()) == Some("csv")
    {
        let manifest = dataset::read_manifest_csv(&args.inputs[0])?;
        manifest.with_label(Label::Normal).map(|e| PathBuf::from(&e.path)).collect()
    } else {
        expand_inputs(&args.inputs)?
    };

    let specs: Vec<Spectrogram> = paths
        .par_iter()
        .map(|p| load_input(p, &cfg))
        .collect::<Result<_>>()?;
    let reference = specdiff::build_reference(&specs, args.z)?;
    formats::save_reference(&args.output, &reference)?;
    write_run_config(&args.output, &cfg)?;
    println!(
        "reference {} ({}x{}, z={}, N={})",
        args.output.display(),
        reference.rows(),
        reference.cols(),
        reference.z,
        reference.training_count
    );
    Ok(())
}

fn cmd_score(args: ScoreArgs, mut cfg: RunConfig) -> Result<()> {
    if let Some(ch) = args.channel {
        cfg.channel = ch;
    }
    let reference = formats::load_reference(&args.reference)?;
    let metrics = args.metric.unwrap_or_else(|| Metric::ALL.to_vec());
    let explain_format = match args.explain_format.as_str() {
        "image" => ExplanationFormat::Image,
        "matrix" => ExplanationFormat::Matrix,
        other => {
            return Err(Error::InvalidConfig(format!(
                "explain format must be image or matrix, got {other:?}"
            )))
        }
    };
    if let Some(dir) = &args.explain_dir {
        fs::create_dir_all(dir)?;
    }

    let paths = expand_inputs(&args.inputs)?;
    let rows: Vec<Vec<(String, scoring::AnomalyScore, f64)>> = paths
        .par_iter()
        .map(|path| -> Result<Vec<(String, scoring::AnomalyScore, f64)>> {
            let spec = load_input(path, &cfg)?;
            let d = scoring::difference_spectrogram(&spec, &reference)?;
            if let Some(dir) = &args.explain_dir {
                let ext = match explain_format {
                    ExplanationFormat::Image => "pgm",
                    ExplanationFormat::Matrix => "spec",
                };
                let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                scoring::export_explanation(&d, &dir.join(format!("{stem}.{ext}")), explain_format)?;
            }
            metrics
                .iter()
                .map(|&m| {
                    let s = scoring::score_difference(&d, m)?;
                    Ok((path.to_string_lossy().into_owned(), s, reference.z))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let flat: Vec<_> = rows.into_iter().flatten().collect();

    match &args.output {
        Some(out) => {
            let mut w = BufWriter::new(File::create(out)?);
            scoring::write_scores_csv(&mut w, &flat)?;
            w.flush()?;
            write_run_config(out, &cfg)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            scoring::write_scores_csv(&mut stdout, &flat)?;
        }
    }
    Ok(())
}

/// Lazily loads and caches spectrograms for the tuning protocol; every
/// manifest entry is read once per run no matter how many seeds reuse it.
struct CachingStore<'a> {
    cfg: &'a RunConfig,
    cache: RefCell<HashMap<String, Spectrogram>>,
}

impl SpectrogramStore for CachingStore<'_> {
    fn load(&self, id: &str) -> Result<Spectrogram> {
        if let Some(hit) = self.cache.borrow().get(id) {
            return Ok(hit.clone());
        }
        let spec = load_input(Path::new(id), self.cfg)?;
        self.cache.borrow_mut().insert(id.to_string(), spec.clone());
        Ok(spec)
    }
}

fn cmd_tune(args: TuneArgs, mut cfg: RunConfig, seed_override: Option<u64>) -> Result<()> {
    if let Some(z) = args.z_grid {
        cfg.z_grid = z;
    }
    if let Some(m) = args.metrics {
        cfg.metrics = m;
    }
    if let Some(s) = args.seeds {
        cfg.seeds = s;
    } else if let Some(s) = seed_override {
        cfg.seeds = vec![s];
    }
    cfg.validate()?;

    let manifest = dataset::read_manifest_csv(&args.manifest)?;
    fs::create_dir_all(&args.output)?;
    let store = CachingStore { cfg: &cfg, cache: RefCell::new(HashMap::new()) };
    let grid = cfg.grid();

    let mut records_csv: Vec<u8> = Vec::new();
    let mut results_csv: Vec<u8> = Vec::new();
    for (index, ((machine_type, machine_id), entries)) in manifest.by_machine().into_iter().enumerate() {
        let group = DatasetManifest::new(entries.into_iter().cloned().collect())?;
        let outcome = run_protocol(&store, &group, &cfg.seeds, &grid)?;
        println!(
            "{machine_type}/{machine_id}: mean test AUC {:.4} over {} seeds",
            outcome.mean_test_auc,
            cfg.seeds.len()
        );

        let mut records = Vec::new();
        specdiff::tuning::write_records_csv(&mut records, &machine_type, &machine_id, &outcome.records)?;
        let mut results = Vec::new();
        specdiff::tuning::write_results_csv(&mut results, &machine_type, &machine_id, &outcome)?;
        if index == 0 {
            records_csv.extend_from_slice(&records);
            results_csv.extend_from_slice(&results);
        } else {
            // Append further machine groups without repeating headers.
            records_csv.extend(records.splitn(2, |&b| b == b'\n').nth(1).unwrap_or_default());
            results_csv.extend(results.splitn(2, |&b| b == b'\n').nth(1).unwrap_or_default());
        }
    }

    fs::write(args.output.join("tuning_records.csv"), records_csv)?;
    fs::write(args.output.join("grid_results.csv"), results_csv)?;
    write_run_config(&args.output, &cfg)?;
    Ok(())
}

fn cmd_split(args: SplitArgs, seed: Option<u64>) -> Result<()> {
    let manifest = dataset::read_manifest_csv(&args.manifest)?;
    let plan = make_splits(&manifest, seed.unwrap_or(0))?;
    let mut w = BufWriter::new(File::create(&args.output)?);
    plan.to_json(&mut w)?;
    w.flush()?;
    println!(
        "plan {}: {} train / {} validation / {} test",
        args.output.display(),
        plan.train.len(),
        plan.validation.len(),
        plan.test.len()
    );
    Ok(())
}

fn cmd_validate_binomial(args: ValidateBinomialArgs, cfg: RunConfig, seed: Option<u64>) -> Result<()> {
    let seeds = args.seeds.unwrap_or_else(|| cfg.seeds.clone());
    let base_seed = seed.unwrap_or(0);
    for &z in &args.z_list {
        if (args.train as f64) * (1.0 - z) < 1.0 {
            eprintln!(
                "warning: quantile granularity: {} training samples resolve less than one sample above z={z}",
                args.train
            );
        }
    }
    let spec = SyntheticSpec::flat(args.rows, args.cols, 0.0, args.sigma, base_seed)?;
    let reports = synthetic::exceedance_experiment(args.train, args.test, &spec, &args.z_list, &seeds)?;

    let mut w = BufWriter::new(File::create(&args.output)?);
    synthetic::write_reports_csv(&mut w, &reports)?;
    w.flush()?;
    if let Some(svg_path) = &args.svg {
        fs::write(svg_path, synthetic::render_deviation_svg(&reports))?;
    }
    write_run_config(&args.output, &cfg)?;
    for r in &reports {
        println!(
            "z={}: mean_count={:.2} expected={:.2} relative_deviation={:.4}",
            r.z, r.mean_count, r.expected, r.relative_deviation
        );
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs, cfg: RunConfig, seed: Option<u64>) -> Result<()> {
    let bench_cfg = PatchBenchmarkConfig {
        rows: args.rows,
        cols: args.cols,
        train: args.train,
        val_normal: args.val_normal,
        val_anormal: args.val_anormal,
        test_normal: args.test_normal,
        test_anormal: args.test_anormal,
        patch_rows: args.patch,
        patch_cols: args.patch,
        amplitude: args.amplitude,
        noise_sigma: args.sigma,
        seed: seed.unwrap_or(0),
    };
    let data = synthetic::generate_patch_benchmark(&bench_cfg)?;

    fs::create_dir_all(args.output.join("train"))?;
    fs::create_dir_all(args.output.join("validation"))?;
    fs::create_dir_all(args.output.join("test"))?;

    let machine_id = format!("patch-seed{}", bench_cfg.seed);
    let mut entries = Vec::new();
    let mut save = |dir: &str, name: String, spec: &Spectrogram, label: Label| -> Result<String> {
        let path = args.output.join(dir).join(format!("{name}.spec"));
        let named = Spectrogram::new(spec.values.clone(), name, spec.fingerprint.clone());
        formats::save_spectrogram(&path, &named)?;
        let path_str = path.to_string_lossy().into_owned();
        entries.push(ManifestEntry {
            path: path_str.clone(),
            label,
            machine_type: "synthetic".into(),
            machine_id: machine_id.clone(),
            snr: String::new(),
        });
        Ok(path_str)
    };

    let mut plan =
        SplitPlan { seed: bench_cfg.seed, train: Vec::new(), validation: Vec::new(), test: Vec::new() };
    for (i, s) in data.train.iter().enumerate() {
        let p = save("train", format!("train-{i:05}"), s, Label::Normal)?;
        plan.train.push(p);
    }
    for (i, (s, label)) in data.validation.iter().enumerate() {
        let p = save("validation", format!("val-{label}-{i:05}"), s, *label)?;
        plan.validation.push(specdiff::evaluation::PlanEntry { id: p, label: *label });
    }
    for (i, (s, label)) in data.test.iter().enumerate() {
        let p = save("test", format!("test-{label}-{i:05}"), s, *label)?;
        plan.test.push(specdiff::evaluation::PlanEntry { id: p, label: *label });
    }

    let manifest = DatasetManifest::new(entries)?;
    let mut w = BufWriter::new(File::create(args.output.join("manifest.csv"))?);
    dataset::write_manifest_csv(&mut w, &manifest)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(args.output.join("split_plan.json"))?);
    plan.to_json(&mut w)?;
    w.flush()?;
    write_run_config(&args.output, &cfg)?;
    println!(
        "synthetic dataset in {}: {} train, {} validation, {} test",
        args.output.display(),
        data.train.len(),
        data.validation.len(),
        data.test.len()
    );
    Ok(())
}
