//! Finite-difference verification of the backward pass.

use std::collections::HashSet;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

use super::loss::{wce_loss, ClassWeights};
use super::tensor::Tensor;
use super::{Gradients, ModelState, NnError, ParamId};

/// Deliberate bugs the checker must be able to detect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultInjection {
    #[default]
    None,
    /// Negates the analytic conv1 weight gradient; a correct checker then
    /// reports relative errors near 2.0 on those parameters.
    FlipConv1WeightGrad,
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions<T> {
    /// Total parameters to probe, spread evenly over the eight tensors so
    /// every layer is covered.
    pub n_params: usize,
    /// Central-difference step.
    pub step: T,
    pub seed: u64,
    pub fault: FaultInjection,
}

impl<T: Scalar> Default for GradCheckOptions<T> {
    fn default() -> Self {
        GradCheckOptions {
            n_params: 200,
            // Small enough to stay inside one linear region of the
            // ReLU/maxpool surface; the f64 oracle loses nothing to roundoff.
            step: T::from_f64(1e-5),
            seed: 0,
            fault: FaultInjection::None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport<T> {
    pub max_rel_err: T,
    pub mean_rel_err: T,
    pub checked: usize,
    /// The probe with the largest relative error, for diagnostics.
    pub worst: Option<WorstProbe<T>>,
}

/// Where the largest analytic/numeric disagreement was observed.
#[derive(Debug, Clone, Copy)]
pub struct WorstProbe<T> {
    pub param: ParamId,
    pub index: usize,
    pub analytic: T,
    pub numeric: T,
}

/// Batch loss under the model's forward pass (no gradient retained).
fn batch_loss<T: Scalar>(
    state: &ModelState<T>,
    inputs: &[Tensor<T>],
    targets: &[usize],
    weights: &ClassWeights<T>,
) -> Result<T, NnError> {
    let (logits, _) = state.predict_batch(inputs)?;
    let (loss, _) = wce_loss(&logits, targets, weights)?;
    Ok(loss)
}

/// Analytic batch gradients via backprop, summed in fixed parameter order.
pub fn analytic_gradients<T: Scalar>(
    state: &ModelState<T>,
    inputs: &[Tensor<T>],
    targets: &[usize],
    weights: &ClassWeights<T>,
) -> Result<(T, Gradients<T>), NnError> {
    if inputs.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let n = state.n_classes();
    let traces: Vec<_> = inputs
        .iter()
        .map(|x| state.forward_trace(x))
        .collect::<Result<_, _>>()?;
    let mut logit_data = Vec::with_capacity(inputs.len() * n);
    for trace in &traces {
        logit_data.extend_from_slice(trace.logits.data());
    }
    let logits = Tensor::from_vec(&[inputs.len(), n], logit_data)?;
    let (loss, grad_logits) = wce_loss(&logits, targets, weights)?;

    let mut total = Gradients::zeros_for(state);
    for (b, trace) in traces.iter().enumerate() {
        let row = Tensor::from_vec(&[n], grad_logits.data()[b * n..(b + 1) * n].to_vec())?;
        let sample = state.backward(trace, &row)?;
        total.add(&sample)?;
    }
    Ok((loss, total))
}

/// Central finite differences against the analytic gradient.
///
/// Probes `opts.n_params` randomly chosen parameters (spread over all eight
/// tensors) and reports the relative error
/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`.
///
/// The analytic side runs in `T` — that is the backward pass under test —
/// but the finite differences always evaluate in `f64`. A 32-bit loss only
/// resolves ~1e-7 relative, which a central difference divides by `2h`,
/// drowning every small gradient; promoting the oracle keeps the comparison
/// meaningful at both precisions.
pub fn grad_check<T: Scalar>(
    state: &ModelState<T>,
    inputs: &[Tensor<T>],
    targets: &[usize],
    weights: &ClassWeights<T>,
    opts: &GradCheckOptions<T>,
) -> Result<GradCheckReport<T>, NnError> {
    let (_, mut grads) = analytic_gradients(state, inputs, targets, weights)?;
    if opts.fault == FaultInjection::FlipConv1WeightGrad {
        grads.get_mut(ParamId::Conv1Weight).scale(-T::one());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let quota = opts.n_params.div_ceil(ParamId::ALL.len());
    let mut probes: Vec<(ParamId, usize)> = Vec::new();
    for id in ParamId::ALL {
        let len = state.param(id).len();
        if len <= quota {
            probes.extend((0..len).map(|j| (id, j)));
        } else {
            let mut chosen = HashSet::with_capacity(quota);
            while chosen.len() < quota {
                chosen.insert(rng.random_range(0..len));
            }
            let mut sorted: Vec<usize> = chosen.into_iter().collect();
            sorted.sort_unstable();
            probes.extend(sorted.into_iter().map(|j| (id, j)));
        }
    }

    let mut probe_state = state.convert::<f64>();
    let inputs64: Vec<Tensor<f64>> = inputs.iter().map(|x| x.convert::<f64>()).collect();
    let weights64 = weights.convert::<f64>();
    let h = opts.step.as_f64();
    let two_h = h + h;
    let floor = 1e-8f64;
    let mut max_rel = 0f64;
    let mut sum_rel = 0f64;
    let mut worst = None;
    for &(id, j) in &probes {
        let original = probe_state.param(id).data()[j];
        probe_state.param_mut(id).data_mut()[j] = original + h;
        let loss_plus = batch_loss(&probe_state, &inputs64, targets, &weights64)?;
        probe_state.param_mut(id).data_mut()[j] = original - h;
        let loss_minus = batch_loss(&probe_state, &inputs64, targets, &weights64)?;
        probe_state.param_mut(id).data_mut()[j] = original;

        let numeric = (loss_plus - loss_minus) / two_h;
        let analytic = grads.get(id).data()[j].as_f64();
        let denom = analytic.abs().max(numeric.abs()).max(floor);
        let rel = (analytic - numeric).abs() / denom;
        sum_rel += rel;
        if rel > max_rel {
            max_rel = rel;
            worst = Some(WorstProbe {
                param: id,
                index: j,
                analytic: T::from_f64(analytic),
                numeric: T::from_f64(numeric),
            });
        }
    }

    Ok(GradCheckReport {
        max_rel_err: T::from_f64(max_rel),
        mean_rel_err: T::from_f64(sum_rel / probes.len() as f64),
        checked: probes.len(),
        worst,
    })
}
