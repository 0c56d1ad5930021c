//! Wall-clock measurement helpers shared by the benchmark commands.

use std::time::Instant;

/// Summary of a set of duration samples, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStats {
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub samples: usize,
}

impl TimingStats {
    /// Summarizes non-empty millisecond samples; `None` when empty.
    ///
    /// Percentiles use the nearest-rank index `round(q·(n−1))` over the
    /// sorted samples, so p50 of an odd-length list is its exact median.
    pub fn from_samples_ms(samples: &[f64]) -> Option<TimingStats> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        Some(TimingStats {
            mean_ms: mean,
            p50_ms: percentile(&sorted, 0.50),
            p95_ms: percentile(&sorted, 0.95),
            samples: sorted.len(),
        })
    }
}

/// Nearest-rank percentile of an already sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Runs `f` `warmup + reps` times and returns the wall-clock milliseconds of
/// the last `reps` runs; the warm-up runs are measured but discarded.
pub fn measure_ms<F: FnMut()>(warmup: usize, reps: usize, mut f: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(reps);
    for i in 0..warmup + reps {
        let t0 = Instant::now();
        f();
        let elapsed = t0.elapsed().as_secs_f64() * 1e3;
        if i >= warmup {
            out.push(elapsed);
        }
    }
    out
}
