//! Side-by-side comparison of the two classification routes.
//!
//! A [`ComparisonReport`] pairs the image/CNN route with the feature/forest
//! route over the same captures and the same held-out test partition, holding
//! quality metrics and timing summaries for both. Rendering also prints a
//! fixed set of reference timings taken once on unrelated hardware; they give
//! the reader a sense of scale but are never asserted against, because
//! absolute timings do not transfer between machines.

use std::fmt::Write as _;
use std::path::Path;

use crate::timing::TimingStats;

use super::metrics::{ConfusionMatrix, MetricsReport};
use super::ExperimentError;

/// Reference per-packet cost of hand-crafted feature extraction, in ms.
///
/// All `REFERENCE_*` constants were measured once on unrelated hardware and
/// are printed purely for context; nothing in this crate asserts against
/// them.
pub const REFERENCE_FEATURE_EXTRACTION_MS: f64 = 26.0;
/// Reference per-packet cost of converting traffic to images, in ms.
pub const REFERENCE_IMAGE_CONVERSION_MS: f64 = 0.3;
/// Reference per-sample random-forest inference cost, in ms.
pub const REFERENCE_FOREST_INFERENCE_MS: f64 = 0.001;
/// Reference per-sample CNN inference cost, in ms.
pub const REFERENCE_CNN_INFERENCE_MS: f64 = 2.6;
/// Reference total for the feature route: extraction plus forest inference.
pub const REFERENCE_FEATURE_TOTAL_MS: f64 =
    REFERENCE_FEATURE_EXTRACTION_MS + REFERENCE_FOREST_INFERENCE_MS;
/// Reference total for the image route: conversion plus CNN inference.
pub const REFERENCE_IMAGE_TOTAL_MS: f64 =
    REFERENCE_IMAGE_CONVERSION_MS + REFERENCE_CNN_INFERENCE_MS;

/// Local timing measurements for both routes.
///
/// Preparation stages are per packet; inference stages are per sample. Route
/// totals add the two medians, mirroring how the reference totals combine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineTimings {
    /// Per packet: capture → units → trimmed blocks → images.
    pub image_conversion: TimingStats,
    /// Per packet: capture → session flows → 74-dimension vectors.
    pub feature_extraction: TimingStats,
    /// Per sample: one forward pass through the trained CNN.
    pub cnn_inference: TimingStats,
    /// Per sample: one forest prediction.
    pub forest_inference: TimingStats,
}

impl PipelineTimings {
    /// Median cost of the image route: conversion + CNN inference.
    pub fn image_total_ms(&self) -> f64 {
        self.image_conversion.p50_ms + self.cnn_inference.p50_ms
    }

    /// Median cost of the feature route: extraction + forest inference.
    pub fn feature_total_ms(&self) -> f64 {
        self.feature_extraction.p50_ms + self.forest_inference.p50_ms
    }
}

/// Quality of one model on the shared test partition.
#[derive(Debug, Clone)]
pub struct ModelOutcome {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

/// Everything produced by one comparison run: both models evaluated on the
/// identical test indices, plus local timings for every stage.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub class_names: Vec<String>,
    /// Number of samples in the shared held-out test partition.
    pub test_size: usize,
    /// Epoch the evaluated CNN checkpoint was taken from.
    pub cnn_best_epoch: usize,
    pub cnn: ModelOutcome,
    pub forest: ModelOutcome,
    pub timings: PipelineTimings,
}

impl ComparisonReport {
    /// Renders the full report as human-readable text.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let t = &self.timings;

        out.push_str("=== pipeline comparison ===\n");
        let _ = writeln!(out, "test_samples={}", self.test_size);
        let _ = writeln!(out, "classes={}", self.class_names.join(";"));
        let _ = writeln!(out, "cnn_checkpoint_epoch={}", self.cnn_best_epoch);

        out.push_str("\n--- quality on the shared test partition ---\n");
        out.push_str("model   accuracy  macro_p   macro_r   macro_f1\n");
        for (name, m) in [("cnn", &self.cnn.metrics), ("forest", &self.forest.metrics)] {
            let _ = writeln!(
                out,
                "{name:<7} {:<9.4} {:<9.4} {:<9.4} {:<9.4}",
                m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1
            );
        }

        let w = self
            .class_names
            .iter()
            .map(|n| n.len())
            .max()
            .unwrap_or(5)
            .max(5);
        out.push_str("\n--- per-class f1 ---\n");
        let _ = writeln!(out, "{:<w$}  support  cnn_f1   forest_f1", "class");
        for (c, name) in self.class_names.iter().enumerate() {
            let cm = &self.cnn.metrics.per_class[c];
            let fm = &self.forest.metrics.per_class[c];
            let _ = writeln!(out, "{name:<w$}  {:<8} {:<8.4} {:<8.4}", cm.support, cm.f1, fm.f1);
        }

        for (name, outcome) in [("cnn", &self.cnn), ("forest", &self.forest)] {
            let _ = writeln!(out, "\n--- confusion: {name} (rows actual, cols predicted) ---");
            out.push_str(&render_confusion(&outcome.confusion, &self.class_names, w));
        }

        out.push_str("\n--- timing (ms, local vs reference*) ---\n");
        let rows = [
            ("image_conversion/packet", t.image_conversion.p50_ms, REFERENCE_IMAGE_CONVERSION_MS),
            ("feature_extraction/packet", t.feature_extraction.p50_ms, REFERENCE_FEATURE_EXTRACTION_MS),
            ("cnn_inference/sample", t.cnn_inference.p50_ms, REFERENCE_CNN_INFERENCE_MS),
            ("forest_inference/sample", t.forest_inference.p50_ms, REFERENCE_FOREST_INFERENCE_MS),
            ("image_route_total", t.image_total_ms(), REFERENCE_IMAGE_TOTAL_MS),
            ("feature_route_total", t.feature_total_ms(), REFERENCE_FEATURE_TOTAL_MS),
        ];
        let _ = writeln!(out, "{:<28} {:>12} {:>12}", "stage", "local_p50", "reference");
        for (stage, local, reference) in rows {
            let _ = writeln!(out, "{stage:<28} {local:>12.6} {reference:>12.6}");
        }
        out.push_str(
            "* reference figures were measured once on unrelated hardware and are\n  shown for scale only; compare the local column between rows instead.\n",
        );

        let faster = if t.image_conversion.p50_ms < t.feature_extraction.p50_ms {
            "image_conversion"
        } else {
            "feature_extraction"
        };
        let _ = writeln!(out, "faster_preparation_per_packet={faster}");
        out
    }

    /// Writes the report as `section,name,value` CSV rows.
    pub fn write_csv(&self, path: &Path) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
        w.write_record(["section", "name", "value"]).map_err(csv_io)?;

        let mut put = |section: &str, name: &str, value: String| -> Result<(), ExperimentError> {
            w.write_record([section, name, value.as_str()]).map_err(csv_io)
        };

        put("meta", "test_samples", self.test_size.to_string())?;
        put("meta", "classes", self.class_names.join(";"))?;
        put("meta", "cnn_checkpoint_epoch", self.cnn_best_epoch.to_string())?;

        for (model, m) in [("cnn", &self.cnn.metrics), ("forest", &self.forest.metrics)] {
            put("metrics", &format!("{model}_accuracy"), format!("{:.12}", m.accuracy))?;
            put("metrics", &format!("{model}_macro_precision"), format!("{:.12}", m.macro_precision))?;
            put("metrics", &format!("{model}_macro_recall"), format!("{:.12}", m.macro_recall))?;
            put("metrics", &format!("{model}_macro_f1"), format!("{:.12}", m.macro_f1))?;
            for (c, name) in self.class_names.iter().enumerate() {
                let pc = &m.per_class[c];
                put("metrics", &format!("{model}_precision_{name}"), format!("{:.12}", pc.precision))?;
                put("metrics", &format!("{model}_recall_{name}"), format!("{:.12}", pc.recall))?;
                put("metrics", &format!("{model}_f1_{name}"), format!("{:.12}", pc.f1))?;
                put("metrics", &format!("{model}_support_{name}"), pc.support.to_string())?;
            }
        }

        let t = &self.timings;
        for (name, stats) in [
            ("image_conversion_per_packet", &t.image_conversion),
            ("feature_extraction_per_packet", &t.feature_extraction),
            ("cnn_inference_per_sample", &t.cnn_inference),
            ("forest_inference_per_sample", &t.forest_inference),
        ] {
            put("timing", &format!("{name}_mean_ms"), format!("{:.9}", stats.mean_ms))?;
            put("timing", &format!("{name}_p50_ms"), format!("{:.9}", stats.p50_ms))?;
            put("timing", &format!("{name}_p95_ms"), format!("{:.9}", stats.p95_ms))?;
            put("timing", &format!("{name}_reps"), stats.samples.to_string())?;
        }
        put("timing", "image_route_total_p50_ms", format!("{:.9}", t.image_total_ms()))?;
        put("timing", "feature_route_total_p50_ms", format!("{:.9}", t.feature_total_ms()))?;

        for (name, value) in [
            ("image_conversion_ms", REFERENCE_IMAGE_CONVERSION_MS),
            ("feature_extraction_ms", REFERENCE_FEATURE_EXTRACTION_MS),
            ("cnn_inference_ms", REFERENCE_CNN_INFERENCE_MS),
            ("forest_inference_ms", REFERENCE_FOREST_INFERENCE_MS),
            ("image_total_ms", REFERENCE_IMAGE_TOTAL_MS),
            ("feature_total_ms", REFERENCE_FEATURE_TOTAL_MS),
        ] {
            put("reference", name, format!("{value}"))?;
        }

        for (model, outcome) in [("cnn", &self.cnn), ("forest", &self.forest)] {
            let n = outcome.confusion.n_classes();
            for a in 0..n {
                for p in 0..n {
                    put(
                        &format!("confusion_{model}"),
                        &format!("{}->{}", self.class_names[a], self.class_names[p]),
                        outcome.confusion.count(a, p).to_string(),
                    )?;
                }
            }
        }

        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> ExperimentError {
    ExperimentError::Io(std::io::Error::other(e))
}

fn render_confusion(m: &ConfusionMatrix, names: &[String], w: usize) -> String {
    let mut out = String::new();
    let cell = names.iter().map(|n| n.len()).max().unwrap_or(6).max(6);
    let _ = write!(out, "{:<w$}", "");
    for name in names {
        let _ = write!(out, " {name:>cell$}");
    }
    out.push('\n');
    for (a, name) in names.iter().enumerate() {
        let _ = write!(out, "{name:<w$}");
        for p in 0..names.len() {
            let _ = write!(out, " {:>cell$}", m.count(a, p));
        }
        out.push('\n');
    }
    out
}
