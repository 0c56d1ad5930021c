//! Single-sample inference latency for both classifiers.
//!
//! Each repetition times one pass over all samples and divides by the
//! sample count; one full warm-up pass runs first and is discarded. The
//! reported statistics (mean/p50/p95) are over the per-repetition figures,
//! so run-to-run spread is visible next to the median.

use std::hint::black_box;

use crate::features::FeatureVector;
use crate::forest::RandomForest;
use crate::nn::{ModelState, Tensor};
use crate::timing::{measure_ms, TimingStats};

use super::ExperimentError;

/// Minimum sample count for a stable per-sample figure.
pub const MIN_BENCH_SAMPLES: usize = 100;

fn check_sizes(found: usize, reps: usize) -> Result<(), ExperimentError> {
    if reps < 3 {
        return Err(ExperimentError::TooFewReps(reps));
    }
    if found < MIN_BENCH_SAMPLES {
        return Err(ExperimentError::TooFewSamples {
            found,
            need: MIN_BENCH_SAMPLES,
        });
    }
    Ok(())
}

fn per_sample_stats(samples_ms: &[f64], n: usize) -> TimingStats {
    let per: Vec<f64> = samples_ms.iter().map(|ms| ms / n as f64).collect();
    TimingStats::from_samples_ms(&per).expect("reps >= 3")
}

/// Milliseconds per forward pass of the CNN.
pub fn bench_cnn_inference(
    state: &ModelState<f32>,
    inputs: &[Tensor<f32>],
    reps: usize,
) -> Result<TimingStats, ExperimentError> {
    check_sizes(inputs.len(), reps)?;
    // Surface shape errors before the clock starts.
    state.forward_logits(&inputs[0])?;
    let samples = measure_ms(1, reps, || {
        for x in inputs {
            black_box(state.forward_logits(x).expect("validated above"));
        }
    });
    Ok(per_sample_stats(&samples, inputs.len()))
}

/// Milliseconds per forest prediction.
pub fn bench_forest_inference(
    forest: &RandomForest<f64>,
    vectors: &[FeatureVector],
    reps: usize,
) -> Result<TimingStats, ExperimentError> {
    check_sizes(vectors.len(), reps)?;
    forest.predict(vectors[0].as_slice())?;
    let samples = measure_ms(1, reps, || {
        for v in vectors {
            black_box(forest.predict(v.as_slice()).expect("validated above"));
        }
    });
    Ok(per_sample_stats(&samples, vectors.len()))
}
