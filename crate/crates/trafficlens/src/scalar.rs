//! Scalar abstraction for the numeric code.
//!
//! Everything that does real arithmetic (tensors, the CNN, the forest) is
//! generic over [`Scalar`] so the same code runs in `f32` for training and
//! in `f64` when verifying gradients.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::Float;
use rand::distr::uniform::SampleUniform;

/// Floating-point scalar usable by every numeric module.
///
/// The conversions are named `as_*` to stay clear of the fallible
/// `num_traits::ToPrimitive` methods that `Float` already brings in.
pub trait Scalar:
    Float + SampleUniform + Sum + Default + Debug + Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn from_usize(v: usize) -> Self;
    fn as_f64(self) -> f64;
    fn as_f32(self) -> f32;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn from_usize(v: usize) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
    fn as_f32(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn from_usize(v: usize) -> Self {
        v as f64
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn as_f32(self) -> f32 {
        self as f32
    }
}
