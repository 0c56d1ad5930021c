//! Dataset splitting, CNN training, metrics and timing benchmarks.
//!
//! Everything here is deterministic under a seed: the split shuffle, the
//! per-epoch batch order, and parameter initialization all derive from
//! [`TrainConfig::seed`], so two runs with the same inputs produce identical
//! models and identical metric reports.

pub mod bench;
pub mod metrics;
pub mod report;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::FeatureError;
use crate::forest::ForestError;
use crate::image::{to_normalized_tensor, ImageDataset, ImageError};
use crate::nn::checkpoint::CheckpointError;
use crate::nn::gradcheck::analytic_gradients;
use crate::nn::{argmax, init_params, AdamParams, ClassWeights, ModelConfig, ModelState, NnError, Tensor};
use crate::pcap::PcapError;
use crate::split::SplitError;

pub use bench::{bench_cnn_inference, bench_forest_inference};
pub use metrics::{evaluate_cnn, evaluate_forest, ConfusionMatrix, MetricsReport};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("dataset too small: {0} samples (need at least 20 to split)")]
    TooSmall(usize),
    #[error("class {0} has no training samples")]
    MissingClass(usize),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("need at least {need} samples, got {found}")]
    TooFewSamples { found: usize, need: usize },
    #[error("need at least 3 repetitions, got {0}")]
    TooFewReps(usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("sample index {index} out of range for dataset of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Pcap(#[from] PcapError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Training hyperparameters and the train/validation/test proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub split: (f64, f64, f64),
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 40,
            batch_size: 256,
            seed: 0,
            split: (0.80, 0.15, 0.05),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.epochs == 0 {
            return Err(ExperimentError::BadConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(ExperimentError::BadConfig("batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(ExperimentError::BadConfig(format!("lr {} must be positive", self.lr)));
        }
        let (a, b, c) = self.split;
        if a < 0.0 || b < 0.0 || c < 0.0 || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(ExperimentError::BadConfig(format!(
                "split ({a}, {b}, {c}) must be non-negative and sum to 1"
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams<f32> {
        AdamParams {
            lr: self.lr as f32,
            beta1: self.beta1 as f32,
            beta2: self.beta2 as f32,
            eps: self.eps as f32,
        }
    }
}

/// Disjoint sample indices covering the whole dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Uniformly shuffles `0..n` under the config seed and cuts it into
/// train/validation/test of sizes ⌊a·n⌋ / ⌊b·n⌋ / remainder.
pub fn shuffle_split(n: usize, cfg: &TrainConfig) -> Result<SplitIndices, ExperimentError> {
    cfg.validate()?;
    if n < 20 {
        return Err(ExperimentError::TooSmall(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    fisher_yates(&mut order, &mut rng);
    let n_train = (cfg.split.0 * n as f64).floor() as usize;
    let n_val = (cfg.split.1 * n as f64).floor() as usize;
    let validation = order.split_off(n_train);
    let (validation, test) = {
        let mut v = validation;
        let t = v.split_off(n_val.min(v.len()));
        (v, t)
    };
    Ok(SplitIndices {
        train: order,
        validation,
        test,
    })
}

fn fisher_yates(xs: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..xs.len()).rev() {
        let j = rng.random_range(0..=i);
        xs.swap(i, j);
    }
}

/// Inverse-frequency class weights `w_c = n_total / (N · n_c)`.
///
/// The sample-weighted mean of the result is exactly 1, so the weighted
/// loss keeps the same scale as the unweighted one; balanced data yields
/// all-ones.
pub fn class_weights(labels: &[usize], n_classes: usize) -> Result<ClassWeights<f64>, ExperimentError> {
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        if y >= n_classes {
            return Err(ExperimentError::IndexOutOfRange { index: y, len: n_classes });
        }
        counts[y] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(ExperimentError::MissingClass(missing));
    }
    let total = labels.len() as f64;
    let w: Vec<f64> = counts
        .iter()
        .map(|&c| total / (n_classes as f64 * c as f64))
        .collect();
    Ok(ClassWeights::new(w)?)
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean weighted cross-entropy per training sample this epoch.
    pub train_loss: f64,
    /// Accuracy over the validation indices after this epoch.
    pub val_accuracy: f64,
}

/// Result of a training run: the final model, the model at the best
/// validation epoch, and the full per-epoch log.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_state: ModelState<f32>,
    pub best_state: ModelState<f32>,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

/// Trains the CNN on `dataset[train_idx]` with weighted cross-entropy and
/// Adam, reporting validation accuracy after every epoch.
///
/// Every epoch reshuffles the training indices under the seeded stream and
/// iterates batches of `cfg.batch_size` (the final partial batch included).
/// `on_epoch` fires once per epoch as records are produced, so callers can
/// stream a log while training runs.
pub fn train_cnn(
    dataset: &ImageDataset,
    train_idx: &[usize],
    val_idx: &[usize],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome, ExperimentError> {
    cfg.validate()?;
    crate::image::validate(dataset)?;
    let n_classes = dataset.class_names.len();
    if n_classes < 2 {
        return Err(ExperimentError::BadConfig(
            "training needs at least 2 classes".into(),
        ));
    }
    if train_idx.is_empty() {
        return Err(ExperimentError::BadConfig("training set is empty".into()));
    }
    if val_idx.is_empty() {
        return Err(ExperimentError::BadConfig("validation set is empty".into()));
    }
    for &i in train_idx.iter().chain(val_idx) {
        if i >= dataset.samples.len() {
            return Err(ExperimentError::IndexOutOfRange {
                index: i,
                len: dataset.samples.len(),
            });
        }
    }

    let tensors: Vec<Tensor<f32>> = dataset
        .samples
        .iter()
        .map(to_normalized_tensor::<f32>)
        .collect();
    let labels: Vec<usize> = dataset
        .samples
        .iter()
        .map(|s| s.label_index as usize)
        .collect();
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
    let weights = class_weights(&train_labels, n_classes)?.convert::<f32>();

    let mut state = init_params::<f32>(ModelConfig::new(n_classes), cfg.seed);
    let adam = cfg.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order = train_idx.to_vec();
    let mut best: Option<(f64, ModelState<f32>, usize)> = None;
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        fisher_yates(&mut order, &mut rng);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(cfg.batch_size) {
            let inputs: Vec<Tensor<f32>> = chunk.iter().map(|&i| tensors[i].clone()).collect();
            let targets: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = analytic_gradients(&state, &inputs, &targets, &weights)?;
            state.adam_step(&grads, &adam)?;
            loss_sum += f64::from(loss) * chunk.len() as f64;
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            val_accuracy: accuracy_over(&state, &tensors, &labels, val_idx)?,
        };
        on_epoch(&record);
        if best.as_ref().is_none_or(|(acc, _, _)| record.val_accuracy > *acc) {
            best = Some((record.val_accuracy, state.clone(), epoch));
        }
        log.push(record);
    }

    let (_, best_state, best_epoch) = best.expect("epochs >= 1");
    Ok(TrainOutcome {
        final_state: state,
        best_state,
        best_epoch,
        log,
    })
}

/// Fraction of `idx` samples whose argmax prediction matches the label.
pub(crate) fn accuracy_over(
    state: &ModelState<f32>,
    tensors: &[Tensor<f32>],
    labels: &[usize],
    idx: &[usize],
) -> Result<f64, ExperimentError> {
    let mut correct = 0usize;
    for &i in idx {
        let logits = state.forward_logits(&tensors[i])?;
        if argmax(logits.data()) == labels[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / idx.len() as f64)
}
