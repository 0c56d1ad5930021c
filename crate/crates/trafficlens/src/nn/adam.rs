//! Adam parameter updates.

use crate::scalar::Scalar;

use super::tensor::Tensor;
use super::NnError;

/// Adam hyperparameters; defaults follow the training recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> Default for AdamParams<T> {
    fn default() -> Self {
        AdamParams {
            lr: T::from_f64(0.001),
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            eps: T::from_f64(1e-8),
        }
    }
}

/// One Adam update of a single parameter tensor.
///
/// `step` is the 1-based step count *after* incrementing, shared by every
/// parameter of a model so bias correction stays in sync:
/// `m ← β1·m + (1−β1)·g`, `v ← β2·v + (1−β2)·g²`, then
/// `θ ← θ − lr·m̂/(√v̂ + ε)` with `m̂ = m/(1−β1^t)`, `v̂ = v/(1−β2^t)`.
pub fn adam_update<T: Scalar>(
    param: &mut Tensor<T>,
    grad: &Tensor<T>,
    m: &mut Tensor<T>,
    v: &mut Tensor<T>,
    step: u64,
    hp: &AdamParams<T>,
) -> Result<(), NnError> {
    if !param.same_shape(grad) || !param.same_shape(m) || !param.same_shape(v) {
        return Err(NnError::ShapeMismatch(format!(
            "adam: param {:?}, grad {:?}, m {:?}, v {:?}",
            param.shape(),
            grad.shape(),
            m.shape(),
            v.shape()
        )));
    }
    debug_assert!(step >= 1, "adam step count must be incremented before updating");
    let one = T::one();
    let t = step as i32;
    let m_corr = one / (one - hp.beta1.powi(t));
    let v_corr = one / (one - hp.beta2.powi(t));

    let p = param.data_mut();
    let g = grad.data();
    let m = m.data_mut();
    let v = v.data_mut();
    for i in 0..p.len() {
        m[i] = hp.beta1 * m[i] + (one - hp.beta1) * g[i];
        v[i] = hp.beta2 * v[i] + (one - hp.beta2) * g[i] * g[i];
        let m_hat = m[i] * m_corr;
        let v_hat = v[i] * v_corr;
        p[i] = p[i] - hp.lr * m_hat / (v_hat.sqrt() + hp.eps);
    }
    Ok(())
}
