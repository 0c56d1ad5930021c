//! Capture-to-dataset plumbing shared by the CLI and the comparison run.
//!
//! Downstream code works on [`TrafficUnit`]s. This module loads labeled
//! captures, splits them into units, and derives both model inputs — byte
//! images and statistical feature vectors — from the *same* unit list.
//! Sample `i` of the image dataset and row `i` of the feature table then
//! describe the same traffic, so a single index split produces identical
//! train/validation/test partitions for both models, which is what makes
//! the side-by-side comparison fair.
//!
//! Captures are processed in file order and units keep their first-seen
//! order, so every derived artifact is deterministic for a given input
//! list and seed.

use std::collections::HashMap;
use std::hint::black_box;
use std::path::{Path, PathBuf};

use crate::experiment::report::{ComparisonReport, ModelOutcome, PipelineTimings};
use crate::experiment::{
    bench_cnn_inference, bench_forest_inference, evaluate_cnn, evaluate_forest, shuffle_split,
    train_cnn, EpochRecord, ExperimentError, SplitIndices, TrainConfig, TrainOutcome,
};
use crate::features::{bench_extraction, direction_of, Direction, FeatureVector, FlowAccumulator};
use crate::forest::{ForestConfig, RandomForest};
use crate::image::{bytes_to_image, to_normalized_tensor, ImageDataset, IMAGE_PIXELS};
use crate::nn::Tensor;
use crate::pcap::{read_packets, CaptureMeta, ParsedPacket};
use crate::split::{
    clean_units, split_units, Granularity, LayerScope, SplitError, TrafficUnit, TrimConfig,
    UnitMode,
};
use crate::timing::{measure_ms, TimingStats};

/// How captures are cut into classification units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub mode: UnitMode,
    pub trim: TrimConfig,
    /// Drop units whose trimmed bytes duplicate an earlier unit, across the
    /// whole run (not per file).
    pub dedup: bool,
    /// Zero MAC and IP addresses in unit bytes before imaging.
    pub anonymize: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            mode: UnitMode::new(Granularity::Session, LayerScope::All),
            trim: TrimConfig::default(),
            dedup: true,
            anonymize: false,
        }
    }
}

/// One decoded capture plus the class label assigned to it.
#[derive(Debug, Clone)]
pub struct LabeledCapture {
    pub path: PathBuf,
    pub label: String,
    pub meta: CaptureMeta,
    pub packets: Vec<ParsedPacket>,
}

/// Reads every `(path, label)` pair into memory, in the given order.
pub fn load_labeled_captures(
    pairs: &[(PathBuf, String)],
) -> Result<Vec<LabeledCapture>, ExperimentError> {
    pairs
        .iter()
        .map(|(path, label)| {
            let (meta, packets) = read_packets(path)?;
            Ok(LabeledCapture {
                path: path.clone(),
                label: label.clone(),
                meta,
                packets,
            })
        })
        .collect()
}

/// Splits every capture under `opts` and cleans the merged unit list.
///
/// Units inherit their capture's label; dedup runs over the merged list so
/// identical traffic appearing in two files keeps only its first copy.
pub fn units_from_captures(
    captures: &[LabeledCapture],
    opts: &BuildOptions,
) -> Result<Vec<TrafficUnit>, ExperimentError> {
    let mut all = Vec::new();
    for c in captures {
        all.extend(split_units(&c.packets, opts.mode, &c.label, &c.path, opts.anonymize)?);
    }
    let cleaned = clean_units(all, &opts.trim, opts.dedup);
    if cleaned.is_empty() {
        return Err(ExperimentError::Split(SplitError::NoUnits));
    }
    Ok(cleaned)
}

/// Sorted unique labels of `units`; the index of a label in this list is
/// its class index everywhere downstream.
pub fn class_names_of(units: &[TrafficUnit]) -> Vec<String> {
    let mut names: Vec<String> = units.iter().map(|u| u.label.clone()).collect();
    names.sort_unstable();
    names.dedup();
    names
}

/// The fixed-size pixel block of one unit: content is cut at `trim.n`
/// bytes (the dedup/compare length), then padded or cut again to the 784
/// bytes a 28×28 image needs. For the default `trim.n = 784` this is the
/// trimmed unit unchanged.
pub fn image_block(unit: &TrafficUnit, trim: &TrimConfig) -> Vec<u8> {
    let mut block = unit.trimmed(trim);
    block.resize(IMAGE_PIXELS, TrimConfig::default().pad_byte);
    block
}

/// Renders cleaned units as an image dataset with sorted class names.
pub fn dataset_from_units(
    units: &[TrafficUnit],
    trim: &TrimConfig,
) -> Result<ImageDataset, ExperimentError> {
    let class_names = class_names_of(units);
    let index: HashMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let samples = units
        .iter()
        .map(|u| Ok(bytes_to_image(&image_block(u, trim), index[u.label.as_str()] as u32)?))
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(ImageDataset { samples, class_names })
}

/// The statistical feature vector of one unit's member packets.
///
/// The forward direction is the 5-tuple of the unit's first packet that has
/// one, matching how whole-capture session extraction orients flows; units
/// without any 5-tuple (packet-granularity, non-IP) count everything as
/// forward.
pub fn unit_features(
    unit: &TrafficUnit,
    packets: &[ParsedPacket],
) -> Result<FeatureVector, ExperimentError> {
    let mut acc = FlowAccumulator::new();
    let forward = unit
        .packet_indices
        .iter()
        .find_map(|&i| packets.get(i).and_then(|p| p.five_tuple));
    for &i in &unit.packet_indices {
        let pkt = packets.get(i).ok_or(ExperimentError::IndexOutOfRange {
            index: i,
            len: packets.len(),
        })?;
        let dir = match forward {
            Some(f) => direction_of(pkt, &f),
            None => Direction::Forward,
        };
        acc.accumulate(pkt, dir);
    }
    Ok(acc.finalize()?)
}

/// Both model inputs derived from one unit list, index-aligned.
#[derive(Debug, Clone)]
pub struct PairedDataset {
    pub units: Vec<TrafficUnit>,
    pub images: ImageDataset,
    pub features: Vec<FeatureVector>,
    /// Class index per unit, parallel to both representations.
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

/// Builds the image dataset and the feature table from the same units.
pub fn paired_dataset(
    captures: &[LabeledCapture],
    opts: &BuildOptions,
) -> Result<PairedDataset, ExperimentError> {
    let units = units_from_captures(captures, opts)?;
    let images = dataset_from_units(&units, &opts.trim)?;
    let class_names = images.class_names.clone();
    let by_path: HashMap<&Path, &[ParsedPacket]> = captures
        .iter()
        .map(|c| (c.path.as_path(), c.packets.as_slice()))
        .collect();

    let mut features = Vec::with_capacity(units.len());
    for unit in &units {
        let packets = by_path.get(unit.source.as_path()).ok_or_else(|| {
            ExperimentError::BadConfig(format!(
                "unit references unknown capture {}",
                unit.source.display()
            ))
        })?;
        features.push(unit_features(unit, packets)?);
    }
    let labels = images.samples.iter().map(|s| s.label_index as usize).collect();
    Ok(PairedDataset { units, images, features, labels, class_names })
}

/// Per-packet wall time of turning grouped traffic into model-ready images.
///
/// Mirrors [`bench_extraction`]: grouping runs once outside the clock on
/// both sides, and each repetition times only the per-route representation
/// work — there, statistic accumulation plus finalize per flow; here,
/// trim/pad plus pixel building per surviving unit. The per-packet figure
/// divides a repetition by the number of packets that entered units
/// (pre-dedup, the same denominator `bench_extraction` uses), so the two
/// preparation costs are directly comparable. Note the structural
/// asymmetry this measures honestly: an image only ever consumes the first
/// `trim.n` bytes of its unit, so its per-packet cost shrinks as sessions
/// grow, while feature extraction must visit every packet.
pub fn bench_image_conversion(
    captures: &[LabeledCapture],
    opts: &BuildOptions,
    reps: usize,
) -> Result<TimingStats, ExperimentError> {
    if reps < 3 {
        return Err(ExperimentError::TooFewReps(reps));
    }
    let mut grouped_packets = 0usize;
    let mut cleaned: Vec<TrafficUnit> = Vec::new();
    for c in captures {
        let units = split_units(&c.packets, opts.mode, &c.label, &c.path, opts.anonymize)?;
        grouped_packets += units.iter().map(|u| u.packet_count).sum::<usize>();
        cleaned.extend(clean_units(units, &opts.trim, opts.dedup));
    }
    if grouped_packets == 0 {
        return Err(ExperimentError::Split(SplitError::NoUnits));
    }
    // Surface conversion errors before the clock starts.
    for unit in &cleaned {
        bytes_to_image(&image_block(unit, &opts.trim), 0)?;
    }

    let samples = measure_ms(1, reps, || {
        for unit in &cleaned {
            black_box(bytes_to_image(&image_block(unit, &opts.trim), 0).expect("validated above"));
        }
    });
    let per_packet: Vec<f64> = samples.iter().map(|ms| ms / grouped_packets as f64).collect();
    Ok(TimingStats::from_samples_ms(&per_packet).expect("reps >= 3"))
}

/// All packets of all captures in file order, as one positional slice for
/// whole-corpus timing runs.
pub fn merged_packets(captures: &[LabeledCapture]) -> Vec<ParsedPacket> {
    captures.iter().flat_map(|c| c.packets.iter().cloned()).collect()
}

/// Everything a comparison run produces: the report plus the trained
/// artifacts, so callers can persist the models and the split.
#[derive(Debug, Clone)]
pub struct ComparisonArtifacts {
    pub report: ComparisonReport,
    pub cnn: TrainOutcome,
    pub forest: RandomForest<f64>,
    pub split: SplitIndices,
    pub data: PairedDataset,
}

/// Trains and evaluates both models on one shared dataset and split.
///
/// The CNN trains on the image view and the forest on the feature view of
/// the *same* units; both are evaluated on the identical `split.test`
/// indices. Timing covers both preparation stages (per packet) and both
/// inference paths (per sample) on this machine and this capture set.
pub fn run_comparison(
    captures: &[LabeledCapture],
    opts: &BuildOptions,
    train_cfg: &TrainConfig,
    forest_cfg: &ForestConfig,
    bench_reps: usize,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<ComparisonArtifacts, ExperimentError> {
    let data = paired_dataset(captures, opts)?;
    let split = shuffle_split(data.units.len(), train_cfg)?;

    let cnn = train_cnn(&data.images, &split.train, &split.validation, train_cfg, on_epoch)?;

    let train_rows: Vec<Vec<f64>> = split
        .train
        .iter()
        .map(|&i| data.features[i].as_slice().to_vec())
        .collect();
    let train_labels: Vec<usize> = split.train.iter().map(|&i| data.labels[i]).collect();
    let forest =
        RandomForest::<f64>::fit(&train_rows, &train_labels, &data.class_names, forest_cfg)?;

    let (cnn_confusion, cnn_metrics) = evaluate_cnn(&cnn.best_state, &data.images, &split.test)?;
    let (forest_confusion, forest_metrics) =
        evaluate_forest(&forest, &data.features, &data.labels, &split.test)?;

    let merged = merged_packets(captures);
    let tensors: Vec<Tensor<f32>> = data
        .images
        .samples
        .iter()
        .map(to_normalized_tensor::<f32>)
        .collect();
    let timings = PipelineTimings {
        image_conversion: bench_image_conversion(captures, opts, bench_reps)?,
        feature_extraction: bench_extraction(&merged, bench_reps)?,
        cnn_inference: bench_cnn_inference(&cnn.best_state, &tensors, bench_reps)?,
        forest_inference: bench_forest_inference(&forest, &data.features, bench_reps)?,
    };

    let report = ComparisonReport {
        class_names: data.class_names.clone(),
        test_size: split.test.len(),
        cnn_best_epoch: cnn.best_epoch,
        cnn: ModelOutcome { confusion: cnn_confusion, metrics: cnn_metrics },
        forest: ModelOutcome { confusion: forest_confusion, metrics: forest_metrics },
        timings,
    };
    Ok(ComparisonArtifacts { report, cnn, forest, split, data })
}
