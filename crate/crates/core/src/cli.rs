//! Command-line interface for the `dcqec` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{
    find_crossing, fit_collapse_with, raw_crossings, run_effective_rate_scan, run_threshold_scan, run_timing_scan,
    write_collapse_json, write_effective_rate_csv, write_loss_csv, write_threshold_csv, write_timing_csv,
    CollapseOptions, Metadata,
};
use crate::lattice::ToricLattice;
use crate::neural::{file_checksum, load_model, save_model, train_with, MlpConfig, MlpModel, TrainSpec};
use crate::pipeline::{DecoderKind, QubitClassifier};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Relative output paths are resolved against this directory when set.
pub const OUTPUT_DIR_ENV: &str = "DCQEC_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "dcqec", version, about = "Toric-code decoding with a neural preprocessor and union-find")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier and write it with its loss trajectory.
    Train(TrainArgs),
    /// Logical failure rates over a grid of sizes and error rates.
    Threshold(ThresholdArgs),
    /// Decode-time measurements.
    Bench(BenchArgs),
    /// Residual error rate after the classifier stage.
    EffectiveRate(EffectiveRateArgs),
    /// Write a model that always predicts the identity.
    StubModel(StubArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Window side of the syndrome mask.
    #[arg(long, default_value_t = 5)]
    pub l_input: usize,
    #[arg(long, default_value_t = 3)]
    pub hidden_layers: usize,
    #[arg(long, default_value_t = 128)]
    pub hidden_nodes: usize,
    /// Lattice size of training instances.
    #[arg(long = "size", default_value_t = 7)]
    pub l_train: usize,
    /// Error rate of training instances.
    #[arg(long = "p", default_value_t = 0.15)]
    pub p_train: f64,
    /// Number of minibatches.
    #[arg(long, default_value_t = 1_000_000)]
    pub epochs: u64,
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value = "uf")]
    pub decoder: DecoderKind,
    /// Model file, required for ml+uf.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Lattice sizes, comma separated.
    #[arg(long = "size", value_delimiter = ',', default_values_t = [7, 11, 15, 23, 31])]
    pub sizes: Vec<usize>,
    /// Error rates: comma list or start:stop:step.
    #[arg(long = "p", default_value = "0.13:0.16:0.005", value_parser = parse_grid)]
    pub p: Grid,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = available parallelism).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Also fit a scaling collapse and write it next to the table.
    #[arg(long)]
    pub collapse: bool,
    #[arg(long, default_value_t = 200)]
    pub resamples: usize,
    #[arg(long, default_value = "threshold.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Decoders to time, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "uf")]
    pub decoders: Vec<DecoderKind>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "size", value_delimiter = ',', default_values_t = [31, 63, 127, 255])]
    pub sizes: Vec<usize>,
    #[arg(long = "p", default_value = "0.05", value_parser = parse_grid)]
    pub p: Grid,
    /// Timed instances per point.
    #[arg(long = "trials", default_value_t = 10_000)]
    pub instances: u64,
    #[arg(long, default_value_t = 100)]
    pub warmup: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EffectiveRateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long = "size", default_value_t = 31)]
    pub size: usize,
    #[arg(long = "p", default_value = "0.01,0.02,0.05,0.1,0.15", value_parser = parse_grid)]
    pub p: Grid,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long, default_value = "effective_rate.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StubArgs {
    #[arg(long, default_value_t = 5)]
    pub l_input: usize,
    #[arg(long, default_value_t = 1)]
    pub hidden_layers: usize,
    #[arg(long, default_value_t = 4)]
    pub hidden_nodes: usize,
    #[arg(long, default_value = "stub.json")]
    pub out: PathBuf,
}

/// Error-rate grid with the text it was parsed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub values: Vec<f64>,
    pub spec: String,
}

/// `a,b,c` or `start:stop:step` (stop included when it lies on the grid).
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let bad = |v: &str| format!("invalid error rate {v:?}");
    let values = if let Some((start, rest)) = s.split_once(':') {
        let (stop, step) = rest.split_once(':').ok_or_else(|| "range must be start:stop:step".to_string())?;
        let start: f64 = start.trim().parse().map_err(|_| bad(start))?;
        let stop: f64 = stop.trim().parse().map_err(|_| bad(stop))?;
        let step: f64 = step.trim().parse().map_err(|_| bad(step))?;
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err("range needs step > 0 and stop >= start".into());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // Rounded to 12 digits so 0.13 + 4 * 0.005 prints as 0.15.
        (0..=n).map(|i| ((start + step * i as f64) * 1e12).round() / 1e12).collect()
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad(v)))
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(format!("error rates must lie in [0, 1]: {s:?}"));
    }
    Ok(Grid {
        values,
        spec: s.to_string(),
    })
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::InvalidLatticeSize(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(Error::Io(e))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => ExitCode::from(EXIT_USAGE),
                CliError::Runtime(_) => ExitCode::from(EXIT_RUNTIME),
            }
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Bench(a) => cmd_bench(a),
        Command::EffectiveRate(a) => cmd_effective_rate(a),
        Command::StubModel(a) => cmd_stub(a),
    }
}

fn output_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

/// `<stem>.<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(Error::InvalidArgument(e.to_string())))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn load_classifier(path: &Path) -> CliResult<(MlpModel<f32>, String)> {
    let model = load_model::<f32>(path).map_err(|e| match e {
        Error::Io(io) => CliError::Runtime(Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        ))),
        other => CliError::Runtime(other),
    })?;
    let checksum = file_checksum(path)?;
    Ok((model, checksum))
}

fn train_spec(a: &TrainArgs) -> TrainSpec {
    TrainSpec {
        batch_size: a.batch_size,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        l_train: a.l_train,
        p_train: a.p_train,
        seed: a.seed,
        ..TrainSpec::default()
    }
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let config = MlpConfig::new(a.l_input, a.hidden_layers, a.hidden_nodes)?;
    let spec = train_spec(&a);
    spec.validate(&config)?;
    let out = output_path(&a.out);
    let meta = Metadata::new()
        .with("command", "train")
        .with("l_input", config.l_input)
        .with("hidden_layers", config.hidden_layers)
        .with("hidden_nodes", config.hidden_nodes)
        .with("parameters", crate::neural::count_parameters(&config))
        .with("l_train", spec.l_train)
        .with("p_train", spec.p_train)
        .with("epochs", spec.epochs)
        .with("batch_size", spec.batch_size)
        .with("learning_rate", spec.learning_rate)
        .with("beta1", spec.beta1)
        .with("beta2", spec.beta2)
        .with("epsilon", spec.epsilon)
        .with("seed", spec.seed)
        .with("out", out.display());
    for (k, v) in &meta.entries {
        eprintln!("{k}: {v}");
    }
    if a.dry_run {
        return Ok(());
    }
    let report_every = (spec.epochs / 20).max(1);
    let outcome = train_with::<f32>(&spec, &config, |i, loss| {
        if (i + 1) % report_every == 0 {
            eprintln!("batch {}/{}: loss {loss:.5}", i + 1, spec.epochs);
        }
    })?;
    save_model(&outcome.model, &out).map_err(|e| match e {
        Error::Io(io) => CliError::Runtime(Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", out.display())))),
        other => CliError::Runtime(other),
    })?;
    let checksum = file_checksum(&out)?;
    let loss_path = sibling(&out, "loss.csv");
    let mut w = create(&loss_path)?;
    write_loss_csv(&mut w, &meta.clone().with("model_sha256", &checksum), &outcome.losses)?;
    w.flush()?;
    println!("{}", out.display());
    Ok(())
}

fn cmd_threshold(a: ThresholdArgs) -> CliResult<()> {
    if a.sizes.is_empty() {
        return Err(CliError::Usage("--size needs at least one lattice size".into()));
    }
    let model = match (a.decoder, &a.model) {
        (DecoderKind::Uf, _) => None,
        (DecoderKind::MlUf, None) => return Err(CliError::Usage("--decoder ml+uf requires --model".into())),
        (DecoderKind::MlUf, Some(p)) => Some(load_classifier(p)?),
    };
    let out = output_path(&a.out);
    let mut meta = Metadata::new()
        .with("command", "threshold")
        .with("decoder", a.decoder.tag())
        .with("sizes", join(&a.sizes))
        .with("p", join(&a.p.values))
        .with("trials", a.trials)
        .with("seed", a.seed)
        .with("workers", a.workers)
        .with("failure", "any nontrivial logical class");
    if let (Some(path), Some((_, sum))) = (&a.model, &model) {
        meta.push("model", path.display());
        meta.push("model_sha256", sum);
    }
    // Open the output before the scan so a bad path fails fast.
    let mut w = create(&out)?;
    let classifier = model.as_ref().map(|(m, _)| m as &dyn QubitClassifier);
    let points = pool(a.workers)?.install(|| run_threshold_scan(classifier, &a.sizes, &a.p.values, a.trials, a.seed))?;
    write_threshold_csv(&mut w, &meta, a.decoder, &points)?;
    w.flush()?;
    println!("{}", out.display());

    if a.collapse {
        let opts = CollapseOptions {
            resamples: a.resamples,
            seed: a.seed,
        };
        let fit = fit_collapse_with(&points, &opts)?;
        let crossings = raw_crossings(&points);
        let path = sibling(&out, "collapse.json");
        let mut w = create(&path)?;
        write_collapse_json(&mut w, &meta.clone().with("resamples", a.resamples), &fit, &crossings)?;
        w.flush()?;
        println!(
            "p_th = {:.5} +/- {:.5}, nu = {:.3} +/- {:.3}, quality = {:.3}",
            fit.p_th, fit.p_th_err, fit.nu, fit.nu_err, fit.quality
        );
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    if a.decoders.is_empty() || a.sizes.is_empty() {
        return Err(CliError::Usage("--decoders and --size need at least one entry".into()));
    }
    let mut decoders = a.decoders.clone();
    decoders.dedup();
    let wants_model = decoders.contains(&DecoderKind::MlUf);
    let model = match (&a.model, wants_model) {
        (None, true) => return Err(CliError::Usage("decoder ml+uf requires --model".into())),
        (Some(p), true) => Some(load_classifier(p)?),
        _ => None,
    };
    let out = output_path(&a.out);
    let mut meta = Metadata::new()
        .with("command", "bench")
        .with("decoders", decoders.iter().map(|d| d.tag()).collect::<Vec<_>>().join(","))
        .with("sizes", join(&a.sizes))
        .with("p", join(&a.p.values))
        .with("instances", a.instances)
        .with("warmup", a.warmup.max(crate::experiments::MIN_WARMUP))
        .with("seed", a.seed)
        .with("timing", "decode only; sampling and syndrome extraction excluded; single thread");
    if let (Some(path), Some((_, sum))) = (&a.model, &model) {
        meta.push("model", path.display());
        meta.push("model_sha256", sum);
    }
    let mut w = create(&out)?;
    let mut tables = Vec::new();
    for &d in &decoders {
        let classifier = match d {
            DecoderKind::Uf => None,
            DecoderKind::MlUf => model.as_ref().map(|(m, _)| m as &dyn QubitClassifier),
        };
        tables.push(run_timing_scan(classifier, &a.sizes, &a.p.values, a.instances, a.warmup, a.seed)?);
    }
    let all: Vec<_> = tables.iter().flatten().copied().collect();
    write_timing_csv(&mut w, &meta, &all)?;
    w.flush()?;
    println!("{}", out.display());

    if let (Some(uf), Some(ml)) = (
        decoders.iter().position(|&d| d == DecoderKind::Uf),
        decoders.iter().position(|&d| d == DecoderKind::MlUf),
    ) {
        let path = sibling(&out, "crossing.csv");
        let mut w = create(&path)?;
        writeln!(w, "# schema: dcqec-crossing/1")?;
        for (k, v) in &meta.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "p,L_cross")?;
        for &p in &a.p.values {
            let cross = find_crossing(&tables[uf], &tables[ml], p);
            let cell = cross.map(|l| l.to_string()).unwrap_or_default();
            writeln!(w, "{p},{cell}")?;
            println!("p = {p}: crossing L = {}", cross.map_or("none".to_string(), |l| l.to_string()));
        }
        w.flush()?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_effective_rate(a: EffectiveRateArgs) -> CliResult<()> {
    let lat = ToricLattice::new(a.size)?;
    let out = output_path(&a.out);
    let (model, checksum) = load_classifier(&a.model)?;
    let meta = Metadata::new()
        .with("command", "effective-rate")
        .with("size", a.size)
        .with("p", join(&a.p.values))
        .with("trials", a.trials)
        .with("seed", a.seed)
        .with("workers", a.workers)
        .with("model", a.model.display())
        .with("model_sha256", checksum);
    let mut w = create(&out)?;
    let points = pool(a.workers)?.install(|| run_effective_rate_scan(&model, &lat, &a.p.values, a.trials, a.seed))?;
    write_effective_rate_csv(&mut w, &meta, a.size, &points)?;
    w.flush()?;
    println!("{}", out.display());
    Ok(())
}

fn cmd_stub(a: StubArgs) -> CliResult<()> {
    let config = MlpConfig::new(a.l_input, a.hidden_layers, a.hidden_nodes)?;
    let out = output_path(&a.out);
    save_model(&MlpModel::<f32>::identity_stub(config)?, &out)?;
    println!("{}", out.display());
    Ok(())
}
