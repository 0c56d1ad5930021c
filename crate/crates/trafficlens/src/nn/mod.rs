//! From-scratch CNN: tensors, layer kernels, loss, optimizer, verification.
//!
//! The architecture is fixed apart from the class count `N`:
//!
//! ```text
//! input 1×28×28
//!   → conv 32@5×5 pad 2 + ReLU → 32×28×28 → maxpool 2×2 → 32×14×14
//!   → conv 64@5×5 pad 0 + ReLU → 64×10×10 → maxpool 2×2 → 64×5×5
//!   → flatten 1600 → dense 512 + ReLU → dense N
//! ```
//!
//! Everything is generic over [`crate::scalar::Scalar`]: `f32` is the
//! training precision, `f64` the gradient-verification precision.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod init;
pub mod loss;
pub mod ops;
pub mod tensor;

pub use adam::AdamParams;
pub use gradcheck::{grad_check, FaultInjection, GradCheckOptions, GradCheckReport};
pub use init::init_params;
pub use loss::{softmax_rows, wce_loss, ClassWeights};
pub use tensor::Tensor;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("spatial extent {0} is odd; 2x2 pooling needs even extents")]
    OddDimension(usize),
    #[error("target class {target} out of range for {classes} classes")]
    BadTarget { target: usize, classes: usize },
    #[error("class weights must be non-empty and strictly positive")]
    BadWeights,
    #[error("batch is empty")]
    EmptyBatch,
}

pub const INPUT_SIDE: usize = 28;
pub const INPUT_PIXELS: usize = INPUT_SIDE * INPUT_SIDE;
const KERNEL: usize = 5;
const CONV1_FILTERS: usize = 32;
const CONV1_PAD: usize = 2;
const CONV2_FILTERS: usize = 64;
const CONV2_PAD: usize = 0;
const FC1_IN: usize = 1600; // 64 × 5 × 5 after the second pool
const FC1_OUT: usize = 512;

/// The eight learnable tensors, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamId {
    Conv1Weight = 0,
    Conv1Bias = 1,
    Conv2Weight = 2,
    Conv2Bias = 3,
    Fc1Weight = 4,
    Fc1Bias = 5,
    Fc2Weight = 6,
    Fc2Bias = 7,
}

impl ParamId {
    pub const ALL: [ParamId; 8] = [
        ParamId::Conv1Weight,
        ParamId::Conv1Bias,
        ParamId::Conv2Weight,
        ParamId::Conv2Bias,
        ParamId::Fc1Weight,
        ParamId::Fc1Bias,
        ParamId::Fc2Weight,
        ParamId::Fc2Bias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Conv1Weight => "conv1.weight",
            ParamId::Conv1Bias => "conv1.bias",
            ParamId::Conv2Weight => "conv2.weight",
            ParamId::Conv2Bias => "conv2.bias",
            ParamId::Fc1Weight => "fc1.weight",
            ParamId::Fc1Bias => "fc1.bias",
            ParamId::Fc2Weight => "fc2.weight",
            ParamId::Fc2Bias => "fc2.bias",
        }
    }

    pub fn from_name(name: &str) -> Option<ParamId> {
        ParamId::ALL.into_iter().find(|id| id.name() == name)
    }
}

/// Shape and initialization data for one parameter tensor.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub shape: Vec<usize>,
    /// Incoming connections per output unit; drives He-uniform bounds.
    pub fan_in: usize,
    pub is_weight: bool,
}

/// Architecture description. Everything except `n_classes` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub n_classes: usize,
}

impl ModelConfig {
    pub fn new(n_classes: usize) -> Self {
        assert!(n_classes >= 2, "a classifier needs at least two classes");
        ModelConfig { n_classes }
    }

    pub fn param_spec(&self, id: ParamId) -> ParamSpec {
        let (shape, fan_in, is_weight) = match id {
            ParamId::Conv1Weight => (
                vec![CONV1_FILTERS, 1, KERNEL, KERNEL],
                KERNEL * KERNEL,
                true,
            ),
            ParamId::Conv1Bias => (vec![CONV1_FILTERS], KERNEL * KERNEL, false),
            ParamId::Conv2Weight => (
                vec![CONV2_FILTERS, CONV1_FILTERS, KERNEL, KERNEL],
                CONV1_FILTERS * KERNEL * KERNEL,
                true,
            ),
            ParamId::Conv2Bias => (vec![CONV2_FILTERS], CONV1_FILTERS * KERNEL * KERNEL, false),
            ParamId::Fc1Weight => (vec![FC1_OUT, FC1_IN], FC1_IN, true),
            ParamId::Fc1Bias => (vec![FC1_OUT], FC1_IN, false),
            ParamId::Fc2Weight => (vec![self.n_classes, FC1_OUT], FC1_OUT, true),
            ParamId::Fc2Bias => (vec![self.n_classes], FC1_OUT, false),
        };
        ParamSpec {
            shape,
            fan_in,
            is_weight,
        }
    }
}

/// Model parameters plus optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState<T> {
    config: ModelConfig,
    params: Vec<Tensor<T>>,
    adam_m: Vec<Tensor<T>>,
    adam_v: Vec<Tensor<T>>,
    step: u64,
}

impl<T: Scalar> ModelState<T> {
    /// All-zero parameters and optimizer state (useful for tests and as the
    /// canvas for [`init_params`]).
    pub fn zeroed(config: ModelConfig) -> Self {
        let zeros: Vec<Tensor<T>> = ParamId::ALL
            .into_iter()
            .map(|id| Tensor::zeros(&config.param_spec(id).shape))
            .collect();
        ModelState {
            config,
            params: zeros.clone(),
            adam_m: zeros.clone(),
            adam_v: zeros,
            step: 0,
        }
    }

    pub fn config(&self) -> ModelConfig {
        self.config
    }

    pub fn n_classes(&self) -> usize {
        self.config.n_classes
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn param(&self, id: ParamId) -> &Tensor<T> {
        &self.params[id as usize]
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.params[id as usize]
    }

    pub fn adam_moments(&self, id: ParamId) -> (&Tensor<T>, &Tensor<T>) {
        (&self.adam_m[id as usize], &self.adam_v[id as usize])
    }

    /// Restores optimizer state wholesale (checkpoint loading).
    pub fn set_adam_state(&mut self, id: ParamId, m: Tensor<T>, v: Tensor<T>) -> Result<(), NnError> {
        if !m.same_shape(self.param(id)) || !v.same_shape(self.param(id)) {
            return Err(NnError::ShapeMismatch(format!(
                "adam state for {} must match parameter shape {:?}",
                id.name(),
                self.param(id).shape()
            )));
        }
        self.adam_m[id as usize] = m;
        self.adam_v[id as usize] = v;
        Ok(())
    }

    pub fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    /// Total number of scalar parameters.
    pub fn n_scalars(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Casts parameters and optimizer state to another precision.
    pub fn convert<U: Scalar>(&self) -> ModelState<U> {
        ModelState {
            config: self.config,
            params: self.params.iter().map(Tensor::convert).collect(),
            adam_m: self.adam_m.iter().map(Tensor::convert).collect(),
            adam_v: self.adam_v.iter().map(Tensor::convert).collect(),
            step: self.step,
        }
    }

    /// Full forward pass of one `1×28×28` sample, keeping every
    /// intermediate needed by [`ModelState::backward`].
    pub fn forward_trace(&self, x: &Tensor<T>) -> Result<ForwardTrace<T>, NnError> {
        if x.shape() != [1, INPUT_SIDE, INPUT_SIDE] {
            return Err(NnError::ShapeMismatch(format!(
                "input: expected [1, 28, 28], got {:?}",
                x.shape()
            )));
        }
        let c1 = ops::conv2d(
            x,
            self.param(ParamId::Conv1Weight),
            self.param(ParamId::Conv1Bias),
            CONV1_PAD,
        )?;
        let r1 = ops::relu(&c1);
        let (p1, idx1) = ops::maxpool2(&r1)?;
        let c2 = ops::conv2d(
            &p1,
            self.param(ParamId::Conv2Weight),
            self.param(ParamId::Conv2Bias),
            CONV2_PAD,
        )?;
        let r2 = ops::relu(&c2);
        let (p2, idx2) = ops::maxpool2(&r2)?;
        let flat = p2.clone().reshaped(&[FC1_IN])?;
        let f1 = ops::dense(
            &flat,
            self.param(ParamId::Fc1Weight),
            self.param(ParamId::Fc1Bias),
        )?;
        let r3 = ops::relu(&f1);
        let logits = ops::dense(
            &r3,
            self.param(ParamId::Fc2Weight),
            self.param(ParamId::Fc2Bias),
        )?;
        Ok(ForwardTrace {
            x: x.clone(),
            c1,
            r1,
            idx1,
            p1,
            c2,
            r2,
            idx2,
            p2,
            flat,
            f1,
            r3,
            logits,
        })
    }

    /// Logits of one sample, without retaining intermediates.
    pub fn forward_logits(&self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        Ok(self.forward_trace(x)?.logits)
    }

    /// Logits (`[B, N]`) and argmax class per sample; ties resolve to the
    /// lowest class index.
    pub fn predict_batch(&self, inputs: &[Tensor<T>]) -> Result<(Tensor<T>, Vec<usize>), NnError> {
        if inputs.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let n = self.config.n_classes;
        let mut data = Vec::with_capacity(inputs.len() * n);
        let mut classes = Vec::with_capacity(inputs.len());
        for x in inputs {
            let logits = self.forward_logits(x)?;
            classes.push(argmax(logits.data()));
            data.extend_from_slice(logits.data());
        }
        Ok((Tensor::from_vec(&[inputs.len(), n], data)?, classes))
    }

    /// Backpropagates one sample's logit gradient into parameter gradients.
    pub fn backward(
        &self,
        trace: &ForwardTrace<T>,
        grad_logits: &Tensor<T>,
    ) -> Result<Gradients<T>, NnError> {
        let (d_r3, d_fc2w, d_fc2b) =
            ops::dense_backward(&trace.r3, self.param(ParamId::Fc2Weight), grad_logits)?;
        let d_f1 = ops::relu_backward(&trace.f1, &d_r3)?;
        let (d_flat, d_fc1w, d_fc1b) =
            ops::dense_backward(&trace.flat, self.param(ParamId::Fc1Weight), &d_f1)?;
        let d_p2 = d_flat.reshaped(&[CONV2_FILTERS, 5, 5])?;
        let d_r2 = ops::maxpool2_backward(trace.r2.shape(), &trace.idx2, &d_p2)?;
        let d_c2 = ops::relu_backward(&trace.c2, &d_r2)?;
        let (d_p1, d_c2w, d_c2b) =
            ops::conv2d_backward(&trace.p1, self.param(ParamId::Conv2Weight), &d_c2, CONV2_PAD)?;
        let d_r1 = ops::maxpool2_backward(trace.r1.shape(), &trace.idx1, &d_p1)?;
        let d_c1 = ops::relu_backward(&trace.c1, &d_r1)?;
        let (_d_x, d_c1w, d_c1b) =
            ops::conv2d_backward(&trace.x, self.param(ParamId::Conv1Weight), &d_c1, CONV1_PAD)?;
        Ok(Gradients {
            tensors: vec![d_c1w, d_c1b, d_c2w, d_c2b, d_fc1w, d_fc1b, d_fc2w, d_fc2b],
        })
    }

    /// One optimizer step over all parameters; increments the shared step
    /// counter exactly once.
    pub fn adam_step(&mut self, grads: &Gradients<T>, hp: &AdamParams<T>) -> Result<(), NnError> {
        self.step += 1;
        for id in ParamId::ALL {
            let i = id as usize;
            adam::adam_update(
                &mut self.params[i],
                &grads.tensors[i],
                &mut self.adam_m[i],
                &mut self.adam_v[i],
                self.step,
                hp,
            )?;
        }
        Ok(())
    }
}

/// Intermediates of one sample's forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    pub x: Tensor<T>,
    pub c1: Tensor<T>,
    pub r1: Tensor<T>,
    pub idx1: Vec<usize>,
    pub p1: Tensor<T>,
    pub c2: Tensor<T>,
    pub r2: Tensor<T>,
    pub idx2: Vec<usize>,
    pub p2: Tensor<T>,
    pub flat: Tensor<T>,
    pub f1: Tensor<T>,
    pub r3: Tensor<T>,
    pub logits: Tensor<T>,
}

/// One gradient tensor per parameter, in [`ParamId::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_for(state: &ModelState<T>) -> Self {
        Gradients {
            tensors: ParamId::ALL
                .into_iter()
                .map(|id| Tensor::zeros(state.param(id).shape()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id as usize]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id as usize]
    }

    /// Accumulates another sample's gradients (fixed parameter order keeps
    /// batch sums deterministic).
    pub fn add(&mut self, other: &Gradients<T>) -> Result<(), NnError> {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b)?;
        }
        Ok(())
    }
}

/// Index of the largest value; first index wins ties.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
