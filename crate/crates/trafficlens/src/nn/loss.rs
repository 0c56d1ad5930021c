//! Softmax and class-weighted cross-entropy.

use crate::scalar::Scalar;

use super::tensor::Tensor;
use super::NnError;

/// One positive multiplier per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights<T> {
    w: Vec<T>,
}

impl<T: Scalar> ClassWeights<T> {
    pub fn new(w: Vec<T>) -> Result<Self, NnError> {
        if w.is_empty() || w.iter().any(|v| !(*v > T::zero())) {
            return Err(NnError::BadWeights);
        }
        Ok(ClassWeights { w })
    }

    /// All-ones weights: plain unweighted cross-entropy.
    pub fn uniform(n_classes: usize) -> Self {
        ClassWeights {
            w: vec![T::one(); n_classes],
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn get(&self, class: usize) -> T {
        self.w[class]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn convert<U: Scalar>(&self) -> ClassWeights<U> {
        ClassWeights {
            w: self.w.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }
}

/// Row-wise softmax of a `[B, N]` tensor, computed with max-subtraction.
pub fn softmax_rows<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let (_b, n) = batch_dims(logits)?;
    let mut out = logits.clone();
    for row in out.data_mut().chunks_exact_mut(n) {
        softmax_row(row);
    }
    Ok(out)
}

fn softmax_row<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum = sum + *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

fn batch_dims<T: Scalar>(logits: &Tensor<T>) -> Result<(usize, usize), NnError> {
    match *logits.shape() {
        [b, n] => Ok((b, n)),
        ref s => Err(NnError::ShapeMismatch(format!(
            "logits: expected [batch, classes], got {s:?}"
        ))),
    }
}

/// Class-weighted cross-entropy over a batch of logits.
///
/// Returns the scalar loss
/// `(1/B) · Σ_b w[y_b] · (−log softmax(logits_b)[y_b])`
/// together with its gradient w.r.t. the logits,
/// `grad[b] = w[y_b] · (softmax(logits_b) − onehot(y_b)) / B`.
pub fn wce_loss<T: Scalar>(
    logits: &Tensor<T>,
    targets: &[usize],
    weights: &ClassWeights<T>,
) -> Result<(T, Tensor<T>), NnError> {
    let (b_n, n) = batch_dims(logits)?;
    if b_n == 0 {
        return Err(NnError::EmptyBatch);
    }
    if targets.len() != b_n {
        return Err(NnError::ShapeMismatch(format!(
            "{} targets for a batch of {b_n}",
            targets.len()
        )));
    }
    if weights.len() != n {
        return Err(NnError::ShapeMismatch(format!(
            "{} class weights for {n} classes",
            weights.len()
        )));
    }
    for &y in targets {
        if y >= n {
            return Err(NnError::BadTarget { target: y, classes: n });
        }
    }

    let inv_b = T::one() / T::from_usize(b_n);
    let mut grad = logits.clone();
    let mut loss = T::zero();
    for (row, &y) in grad.data_mut().chunks_exact_mut(n).zip(targets) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter() {
            sum = sum + (*v - max).exp();
        }
        // log softmax(z)[y] = z[y] − max − ln Σ exp(z − max)
        let log_p = row[y] - max - sum.ln();
        let wy = weights.get(y);
        loss = loss - wy * log_p;
        for (c, v) in row.iter_mut().enumerate() {
            let p = (*v - max).exp() / sum;
            let indicator = if c == y { T::one() } else { T::zero() };
            *v = wy * (p - indicator) * inv_b;
        }
    }
    Ok((loss * inv_b, grad))
}
