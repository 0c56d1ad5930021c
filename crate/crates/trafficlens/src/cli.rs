//! Command-line interface over the whole pipeline.
//!
//! Subcommands: `pcap2img`, `features`, `train cnn`, `train forest`,
//! `eval`, `bench extract`, `bench infer`, `report`. Every command accepts
//! `--seed` and `--config <file>`; the config file is flat `key=value`
//! text whose keys mirror the long flag names, and explicit flags win over
//! config values, which win over built-in defaults.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, unparsable
//! config values, missing required combinations), 2 for data errors
//! (unreadable captures, malformed checkpoints, datasets that violate a
//! precondition). Output is line-oriented `key=value` so logs are easy to
//! grep and diff.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::experiment::metrics::{ConfusionMatrix, MetricsReport};
use crate::experiment::{
    bench_cnn_inference, bench_forest_inference, evaluate_cnn, evaluate_forest, shuffle_split,
    train_cnn, EpochRecord, ExperimentError, TrainConfig,
};
use crate::features::{extract_session_features, bench_extraction, read_features_csv, write_features_csv, FeatureVector};
use crate::forest::{load_forest, save_forest, ForestConfig, RandomForest};
use crate::image::{classes_path, read_idx, to_normalized_tensor, write_idx, write_png, ImageDataset};
use crate::nn::checkpoint::{load_checkpoint, save_checkpoint};
use crate::nn::Tensor;
use crate::pipeline::{
    dataset_from_units, load_labeled_captures, merged_packets, run_comparison,
    units_from_captures, BuildOptions, LabeledCapture,
};
use crate::split::{Granularity, LabelManifest, LayerScope, TrimConfig, UnitMode};
use crate::timing::TimingStats;

/// Runs the CLI on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CliError::Data(err)) => {
            eprintln!("error: {err}");
            2
        }
    }
}

#[derive(Debug)]
enum CliError {
    /// The invocation itself is wrong; fix the command line or config.
    Usage(String),
    /// The inputs could not be processed.
    Data(ExperimentError),
}

impl<E: Into<ExperimentError>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.into())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "trafficlens",
    version,
    about = "Classify network traffic as byte images (CNN) or statistical features (random forest)"
)]
struct Cli {
    /// Seed for every stochastic step (shuffles, init, bagging).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert captures into an IDX image dataset (plus classes.txt).
    #[command(name = "pcap2img")]
    Pcap2Img(Pcap2ImgArgs),
    /// Extract per-session feature vectors into a CSV table.
    Features(FeaturesArgs),
    /// Train a model.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Evaluate a saved model on held-out data.
    Eval(EvalArgs),
    /// Time a pipeline stage.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Train and evaluate both models on one dataset and compare them.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum TrainCommand {
    /// Train the CNN on an IDX image dataset.
    Cnn(TrainCnnArgs),
    /// Train the random forest on a feature CSV.
    Forest(TrainForestArgs),
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Time per-packet feature extraction over labeled captures.
    Extract(BenchExtractArgs),
    /// Time per-sample inference of a saved model.
    Infer(BenchInferArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Packet,
    Flow,
    Session,
}

impl From<ModeArg> for Granularity {
    fn from(m: ModeArg) -> Granularity {
        match m {
            ModeArg::Packet => Granularity::Packet,
            ModeArg::Flow => Granularity::Flow,
            ModeArg::Session => Granularity::Session,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LayersArg {
    All,
    #[value(name = "l7")]
    L7,
}

impl From<LayersArg> for LayerScope {
    fn from(l: LayersArg) -> LayerScope {
        match l {
            LayersArg::All => LayerScope::All,
            LayersArg::L7 => LayerScope::L7,
        }
    }
}

/// Flags shared by every command that splits captures into units.
#[derive(Args, Debug)]
struct SplitFlags {
    /// Manifest mapping capture globs to labels, one `<glob>\t<label>` per line.
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Unit granularity.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Which bytes of each packet enter the unit.
    #[arg(long, value_enum)]
    layers: Option<LayersArg>,
    /// Unit length in bytes after trim/pad.
    #[arg(long)]
    bytes: Option<usize>,
    /// Zero MAC and IP addresses in unit bytes.
    #[arg(long)]
    anonymize: bool,
    /// Keep duplicate units instead of dropping them.
    #[arg(long)]
    no_dedup: bool,
}

#[derive(Args, Debug)]
struct Pcap2ImgArgs {
    #[command(flatten)]
    split: SplitFlags,
    /// Output IDX3 image file (classes.txt is written next to it).
    #[arg(long, value_name = "FILE", default_value = "images.idx3")]
    out_images: PathBuf,
    /// Output IDX1 label file.
    #[arg(long, value_name = "FILE", default_value = "labels.idx1")]
    out_labels: PathBuf,
    /// Also export every sample as a PNG into this directory.
    #[arg(long, value_name = "DIR")]
    png_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    /// Manifest mapping capture globs to labels.
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Output CSV path.
    #[arg(long, value_name = "FILE", default_value = "features.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainCnnArgs {
    /// IDX3 image file (classes.txt expected next to it).
    #[arg(long, value_name = "FILE")]
    images: PathBuf,
    /// IDX1 label file.
    #[arg(long, value_name = "FILE")]
    labels: PathBuf,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Batch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Where to write the best-validation checkpoint.
    #[arg(long, value_name = "FILE", default_value = "model.tlnn")]
    out: PathBuf,
    /// Also write the final-epoch model here.
    #[arg(long, value_name = "FILE")]
    out_final: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainForestArgs {
    /// Feature CSV produced by `features`.
    #[arg(long, value_name = "FILE")]
    features: PathBuf,
    /// Number of trees.
    #[arg(long)]
    trees: Option<usize>,
    /// Maximum tree depth (unlimited when absent).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Minimum samples needed to split a node.
    #[arg(long)]
    min_split: Option<usize>,
    /// Candidate features per split (default ⌈√d⌉).
    #[arg(long)]
    features_per_split: Option<usize>,
    /// Fit each tree on the full training set instead of a bootstrap sample.
    #[arg(long)]
    no_bootstrap: bool,
    /// Where to write the forest.
    #[arg(long, value_name = "FILE", default_value = "model.tlrf")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Saved model: a .tlnn CNN checkpoint or a .tlrf forest.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// IDX3 images (CNN checkpoints).
    #[arg(long, value_name = "FILE")]
    images: Option<PathBuf>,
    /// IDX1 labels (CNN checkpoints).
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
    /// Feature CSV (forest checkpoints).
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchExtractArgs {
    /// Manifest mapping capture globs to labels.
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Timed repetitions over the whole corpus (first warm-up discarded).
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Debug)]
struct BenchInferArgs {
    /// Saved model: a .tlnn CNN checkpoint or a .tlrf forest.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// IDX3 images (CNN checkpoints).
    #[arg(long, value_name = "FILE")]
    images: Option<PathBuf>,
    /// Feature CSV (forest checkpoints).
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// Timed repetitions (first warm-up discarded).
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    split: SplitFlags,
    /// Training epochs for the CNN.
    #[arg(long)]
    epochs: Option<usize>,
    /// CNN batch size.
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Number of forest trees.
    #[arg(long)]
    trees: Option<usize>,
    /// Maximum tree depth (unlimited when absent).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Timed repetitions for every benchmark stage.
    #[arg(long)]
    reps: Option<usize>,
    /// Also write every metric and timing as CSV rows.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Save the trained CNN (best-validation checkpoint).
    #[arg(long, value_name = "FILE")]
    out_cnn: Option<PathBuf>,
    /// Save the trained forest.
    #[arg(long, value_name = "FILE")]
    out_forest: Option<PathBuf>,
}

/// Parsed `key=value` config file; keys mirror long flag names.
struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig(HashMap::new()));
        };
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut map = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                CliError::Usage(format!("config key {key}={raw}: {e}"))
            }),
        }
    }

    fn get_enum<E: ValueEnum>(&self, key: &str) -> Result<Option<E>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => E::from_str(raw, true).map(Some).map_err(|e| {
                CliError::Usage(format!("config key {key}={raw}: {e}"))
            }),
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// A boolean flag is on when passed explicitly or set true in the config.
fn pick_flag(flag: bool, file: Option<bool>) -> bool {
    flag || file.unwrap_or(false)
}

fn build_options(flags: &SplitFlags, cfg: &FileConfig) -> Result<BuildOptions, CliError> {
    let mode = pick(flags.mode, cfg.get_enum::<ModeArg>("mode")?, ModeArg::Session);
    let layers = pick(flags.layers, cfg.get_enum::<LayersArg>("layers")?, LayersArg::All);
    let bytes = pick(flags.bytes, cfg.get("bytes")?, 784);
    if bytes == 0 {
        return Err(CliError::Usage("--bytes must be positive".into()));
    }
    Ok(BuildOptions {
        mode: UnitMode::new(mode.into(), layers.into()),
        trim: TrimConfig::with_len(bytes),
        dedup: !pick_flag(flags.no_dedup, cfg.get("no-dedup")?),
        anonymize: pick_flag(flags.anonymize, cfg.get("anonymize")?),
    })
}

fn train_config(
    epochs: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    seed: u64,
    cfg: &FileConfig,
) -> Result<TrainConfig, CliError> {
    let default = TrainConfig::default();
    Ok(TrainConfig {
        epochs: pick(epochs, cfg.get("epochs")?, default.epochs),
        batch_size: pick(batch, cfg.get("batch")?, default.batch_size),
        lr: pick(lr, cfg.get("lr")?, default.lr),
        seed,
        ..default
    })
}

fn load_manifest_captures(manifest: &Path) -> Result<Vec<LabeledCapture>, CliError> {
    let parsed = LabelManifest::load(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let pairs = parsed.expand(base)?;
    if pairs.is_empty() {
        return Err(CliError::Data(ExperimentError::BadConfig(format!(
            "manifest {} matched no capture files",
            manifest.display()
        ))));
    }
    let captures = load_labeled_captures(&pairs)?;
    for c in &captures {
        println!(
            "capture={} label={} packets={}",
            c.path.display(),
            c.label,
            c.packets.len()
        );
    }
    Ok(captures)
}

fn print_epoch(r: &EpochRecord) {
    println!(
        "epoch={} train_loss={:.6} val_accuracy={:.6}",
        r.epoch, r.train_loss, r.val_accuracy
    );
}

fn print_timing(stage: &str, per: &str, stats: &TimingStats) {
    println!(
        "stage={stage} per={per} mean_ms={:.6} p50_ms={:.6} p95_ms={:.6} reps={}",
        stats.mean_ms, stats.p50_ms, stats.p95_ms, stats.samples
    );
}

fn print_metrics(report: &MetricsReport, matrix: &ConfusionMatrix, class_names: &[String]) {
    println!("test_samples={}", matrix.total());
    println!("accuracy={:.6}", report.accuracy);
    println!(
        "macro_precision={:.6} macro_recall={:.6} macro_f1={:.6}",
        report.macro_precision, report.macro_recall, report.macro_f1
    );
    for (c, name) in class_names.iter().enumerate() {
        let m = &report.per_class[c];
        println!(
            "class={name} precision={:.6} recall={:.6} f1={:.6} support={}",
            m.precision, m.recall, m.f1, m.support
        );
    }
    for (a, actual) in class_names.iter().enumerate() {
        for (p, predicted) in class_names.iter().enumerate() {
            let count = matrix.count(a, p);
            if count > 0 {
                println!("confusion actual={actual} predicted={predicted} count={count}");
            }
        }
    }
}

/// The two on-disk model formats, told apart by their magic bytes.
enum CheckpointKind {
    Cnn,
    Forest,
}

fn checkpoint_kind(path: &Path) -> Result<CheckpointKind, CliError> {
    let bytes = fs::read(path).map_err(ExperimentError::Io)?;
    match bytes.get(..4) {
        Some(b"TLNN") => Ok(CheckpointKind::Cnn),
        Some(b"TLRF") => Ok(CheckpointKind::Forest),
        _ => Err(CliError::Data(ExperimentError::BadConfig(format!(
            "{} is neither a TLNN nor a TLRF checkpoint",
            path.display()
        )))),
    }
}

fn read_image_dataset(images: &Path, labels: &Path) -> Result<ImageDataset, CliError> {
    Ok(read_idx(images, labels, &classes_path(images))?)
}

/// Feature rows plus labels mapped onto the forest's class table.
fn forest_eval_data(
    forest: &RandomForest<f64>,
    csv: &Path,
) -> Result<(Vec<FeatureVector>, Vec<usize>), CliError> {
    let (vectors, labels) = read_features_csv(csv)?;
    let class_of = |label: &str| {
        forest
            .class_names()
            .iter()
            .position(|n| n == label)
            .ok_or_else(|| {
                CliError::Data(ExperimentError::BadConfig(format!(
                    "label {label:?} in {} is unknown to the model (classes: {})",
                    csv.display(),
                    forest.class_names().join(";")
                )))
            })
    };
    let indices = labels.iter().map(|l| class_of(l)).collect::<Result<Vec<_>, _>>()?;
    Ok((vectors, indices))
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let seed = pick(cli.seed, cfg.get("seed")?, 0);
    match cli.command {
        Command::Pcap2Img(args) => pcap2img(args, &cfg),
        Command::Features(args) => features(args),
        Command::Train(TrainCommand::Cnn(args)) => train_cnn_cmd(args, &cfg, seed),
        Command::Train(TrainCommand::Forest(args)) => train_forest_cmd(args, &cfg, seed),
        Command::Eval(args) => eval(args),
        Command::Bench(BenchCommand::Extract(args)) => bench_extract(args, &cfg),
        Command::Bench(BenchCommand::Infer(args)) => bench_infer(args, &cfg),
        Command::Report(args) => report(args, &cfg, seed),
    }
}

fn pcap2img(args: Pcap2ImgArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let opts = build_options(&args.split, cfg)?;
    let captures = load_manifest_captures(&args.split.manifest)?;
    let units = units_from_captures(&captures, &opts)?;
    let dataset = dataset_from_units(&units, &opts.trim)?;
    write_idx(&dataset, &args.out_images, &args.out_labels)?;
    if let Some(dir) = &args.png_dir {
        fs::create_dir_all(dir).map_err(ExperimentError::Io)?;
        for (i, sample) in dataset.samples.iter().enumerate() {
            let label = sanitize(&dataset.class_names[sample.label_index as usize]);
            write_png(sample, &dir.join(format!("unit{i:05}_{label}.png")))?;
        }
        println!("png_dir={}", dir.display());
    }
    println!(
        "captures={} units={} images={} classes={}",
        captures.len(),
        units.len(),
        dataset.samples.len(),
        dataset.class_names.len()
    );
    println!(
        "out_images={} out_labels={} out_classes={}",
        args.out_images.display(),
        args.out_labels.display(),
        classes_path(&args.out_images).display()
    );
    Ok(())
}

fn features(args: FeaturesArgs) -> Result<(), CliError> {
    let captures = load_manifest_captures(&args.manifest)?;
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for c in &captures {
        let vs = extract_session_features(&c.packets)?;
        labels.extend(std::iter::repeat_n(c.label.clone(), vs.len()));
        vectors.extend(vs);
    }
    write_features_csv(&vectors, &labels, &args.out)?;
    println!("captures={} flows={} out={}", captures.len(), vectors.len(), args.out.display());
    Ok(())
}

fn train_cnn_cmd(args: TrainCnnArgs, cfg: &FileConfig, seed: u64) -> Result<(), CliError> {
    let dataset = read_image_dataset(&args.images, &args.labels)?;
    let tc = train_config(args.epochs, args.batch, args.lr, seed, cfg)?;
    let split = shuffle_split(dataset.samples.len(), &tc)?;
    println!(
        "samples={} train={} validation={} test={} seed={}",
        dataset.samples.len(),
        split.train.len(),
        split.validation.len(),
        split.test.len(),
        tc.seed
    );
    let outcome = train_cnn(&dataset, &split.train, &split.validation, &tc, &mut print_epoch)?;
    save_checkpoint(&outcome.best_state, &args.out)?;
    println!("best_epoch={} checkpoint={}", outcome.best_epoch, args.out.display());
    if let Some(path) = &args.out_final {
        save_checkpoint(&outcome.final_state, path)?;
        println!("final_checkpoint={}", path.display());
    }
    Ok(())
}

fn train_forest_cmd(args: TrainForestArgs, cfg: &FileConfig, seed: u64) -> Result<(), CliError> {
    let (vectors, label_names) = read_features_csv(&args.features)?;
    if vectors.is_empty() {
        return Err(CliError::Data(ExperimentError::BadConfig(format!(
            "{} holds no feature rows",
            args.features.display()
        ))));
    }
    let mut class_names: Vec<String> = label_names.clone();
    class_names.sort_unstable();
    class_names.dedup();
    let labels: Vec<usize> = label_names
        .iter()
        .map(|l| class_names.iter().position(|n| n == l).expect("built from the same list"))
        .collect();
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.as_slice().to_vec()).collect();

    let fc = ForestConfig {
        n_trees: pick(args.trees, cfg.get("trees")?, 100),
        max_depth: args.max_depth.or(cfg.get("max-depth")?),
        min_samples_split: pick(args.min_split, cfg.get("min-split")?, 2),
        features_per_split: args.features_per_split.or(cfg.get("features-per-split")?),
        bootstrap: !pick_flag(args.no_bootstrap, cfg.get("no-bootstrap")?),
        seed,
    };
    let forest = RandomForest::<f64>::fit(&rows, &labels, &class_names, &fc)?;
    save_forest(&forest, &args.out)?;
    println!(
        "rows={} classes={} trees={} seed={} out={}",
        rows.len(),
        class_names.len(),
        forest.n_trees(),
        seed,
        args.out.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    match checkpoint_kind(&args.checkpoint)? {
        CheckpointKind::Cnn => {
            let (images, labels) = match (&args.images, &args.labels) {
                (Some(i), Some(l)) => (i, l),
                _ => {
                    return Err(CliError::Usage(
                        "a CNN checkpoint needs --images and --labels".into(),
                    ))
                }
            };
            let state = load_checkpoint(&args.checkpoint)?;
            let dataset = read_image_dataset(images, labels)?;
            let idx: Vec<usize> = (0..dataset.samples.len()).collect();
            let (matrix, report) = evaluate_cnn(&state, &dataset, &idx)?;
            println!("model=cnn checkpoint={}", args.checkpoint.display());
            print_metrics(&report, &matrix, &dataset.class_names);
        }
        CheckpointKind::Forest => {
            let Some(csv) = &args.features else {
                return Err(CliError::Usage("a forest checkpoint needs --features".into()));
            };
            let forest = load_forest(&args.checkpoint)?;
            let (vectors, labels) = forest_eval_data(&forest, csv)?;
            let idx: Vec<usize> = (0..vectors.len()).collect();
            let (matrix, report) = evaluate_forest(&forest, &vectors, &labels, &idx)?;
            println!("model=forest checkpoint={}", args.checkpoint.display());
            print_metrics(&report, &matrix, &forest.class_names().to_vec());
        }
    }
    Ok(())
}

fn bench_extract(args: BenchExtractArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let reps = pick(args.reps, cfg.get("reps")?, 10);
    let captures = load_manifest_captures(&args.manifest)?;
    let merged = merged_packets(&captures);
    let stats = bench_extraction(&merged, reps)?;
    print_timing("feature_extraction", "packet", &stats);
    Ok(())
}

fn bench_infer(args: BenchInferArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let reps = pick(args.reps, cfg.get("reps")?, 10);
    match checkpoint_kind(&args.checkpoint)? {
        CheckpointKind::Cnn => {
            let Some(images) = &args.images else {
                return Err(CliError::Usage("a CNN checkpoint needs --images".into()));
            };
            let labels_path = images.with_extension("idx1");
            // Benchmarks only need pixels; labels are read when present so
            // IDX pairs written by pcap2img work as-is, else synthesized.
            let dataset = if labels_path.is_file() {
                read_image_dataset(images, &labels_path)?
            } else {
                return Err(CliError::Usage(format!(
                    "expected the label file {} next to {}",
                    labels_path.display(),
                    images.display()
                )));
            };
            let state = load_checkpoint(&args.checkpoint)?;
            let tensors: Vec<Tensor<f32>> =
                dataset.samples.iter().map(to_normalized_tensor::<f32>).collect();
            let stats = bench_cnn_inference(&state, &tensors, reps)?;
            print_timing("cnn_inference", "sample", &stats);
        }
        CheckpointKind::Forest => {
            let Some(csv) = &args.features else {
                return Err(CliError::Usage("a forest checkpoint needs --features".into()));
            };
            let forest = load_forest(&args.checkpoint)?;
            let (vectors, _) = read_features_csv(csv)?;
            let stats = bench_forest_inference(&forest, &vectors, reps)?;
            print_timing("forest_inference", "sample", &stats);
        }
    }
    Ok(())
}

fn report(args: ReportArgs, cfg: &FileConfig, seed: u64) -> Result<(), CliError> {
    let opts = build_options(&args.split, cfg)?;
    let tc = train_config(args.epochs, args.batch, args.lr, seed, cfg)?;
    let fc = ForestConfig {
        n_trees: pick(args.trees, cfg.get("trees")?, 100),
        max_depth: args.max_depth.or(cfg.get("max-depth")?),
        seed,
        ..ForestConfig::default()
    };
    let reps = pick(args.reps, cfg.get("reps")?, 5);
    let captures = load_manifest_captures(&args.split.manifest)?;

    let artifacts = run_comparison(&captures, &opts, &tc, &fc, reps, &mut print_epoch)?;
    print!("{}", artifacts.report.render_text());

    if let Some(path) = &args.csv {
        artifacts.report.write_csv(path)?;
        println!("csv={}", path.display());
    }
    if let Some(path) = &args.out_cnn {
        save_checkpoint(&artifacts.cnn.best_state, path)?;
        println!("cnn_checkpoint={}", path.display());
    }
    if let Some(path) = &args.out_forest {
        save_forest(&artifacts.forest, path)?;
        println!("forest_checkpoint={}", path.display());
    }
    Ok(())
}
