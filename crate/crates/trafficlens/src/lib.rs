//! Network traffic classification toolkit.
//!
//! Turns raw packet captures into two classifier-ready representations and
//! trains a model on each:
//!
//! * a byte-image path: captures are split into traffic units (packet, flow
//!   or session), cleaned, trimmed to a fixed length and rendered as 28x28
//!   grayscale images consumed by a small LeNet-style CNN;
//! * a hand-crafted path: per-session statistical feature vectors consumed
//!   by a random forest.
//!
//! The [`experiment`] module ties both paths together with shared dataset
//! splits, confusion-matrix metrics and timing benchmarks, and the `cli`
//! module exposes the whole pipeline as subcommands.
//!
//! Numeric code is generic over the scalar type via [`scalar::Scalar`]
//! (`f32` for training, `f64` for verification); the aliases below pick the
//! concrete types used by the pipeline.

pub mod cli;
pub mod experiment;
pub mod features;
pub mod forest;
pub mod image;
pub mod nn;
pub mod pcap;
pub mod pipeline;
pub mod scalar;
pub mod split;
pub mod timing;
#[cfg(test)]
pub(crate) mod testutil;

pub use pcap::{CaptureMeta, FiveTuple, ParsedPacket};
pub use scalar::Scalar;
pub use split::{TrafficUnit, TrimConfig, UnitMode};

/// Tensor in training precision.
pub type Tensor32 = nn::Tensor<f32>;
/// Tensor in verification precision.
pub type Tensor64 = nn::Tensor<f64>;
/// CNN state in training precision.
pub type ModelState32 = nn::ModelState<f32>;
/// CNN state in verification precision (gradient checks).
pub type ModelState64 = nn::ModelState<f64>;
/// Random forest over f64 feature vectors (the pipeline default).
pub type Forest64 = forest::RandomForest<f64>;
