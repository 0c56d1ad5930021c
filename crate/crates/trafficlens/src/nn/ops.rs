//! Forward and backward kernels: convolution, pooling, dense, ReLU.
//!
//! All convolutions are cross-correlations (no kernel flip) with stride 1.
//! Inner loops run over contiguous rows so the compiler can vectorize them.

use crate::scalar::Scalar;

use super::tensor::Tensor;
use super::NnError;

fn dims3<T: Scalar>(t: &Tensor<T>, what: &str) -> Result<(usize, usize, usize), NnError> {
    match *t.shape() {
        [c, h, w] => Ok((c, h, w)),
        ref s => Err(NnError::ShapeMismatch(format!("{what}: expected rank 3, got {s:?}"))),
    }
}

fn dims4<T: Scalar>(t: &Tensor<T>, what: &str) -> Result<(usize, usize, usize, usize), NnError> {
    match *t.shape() {
        [o, i, h, w] => Ok((o, i, h, w)),
        ref s => Err(NnError::ShapeMismatch(format!("{what}: expected rank 4, got {s:?}"))),
    }
}

fn check_conv_shapes<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    pad: usize,
) -> Result<(usize, usize, usize, usize, usize, usize), NnError> {
    let (c_in, h, w) = dims3(input, "conv input")?;
    let (c_out, w_in, kh, kw) = dims4(weights, "conv weights")?;
    if w_in != c_in {
        return Err(NnError::ShapeMismatch(format!(
            "conv: input has {c_in} channels, weights expect {w_in}"
        )));
    }
    if bias.len() != c_out {
        return Err(NnError::ShapeMismatch(format!(
            "conv: {c_out} filters but {} bias values",
            bias.len()
        )));
    }
    if h + 2 * pad < kh || w + 2 * pad < kw {
        return Err(NnError::ShapeMismatch(format!(
            "conv: kernel {kh}x{kw} larger than padded input {}x{}",
            h + 2 * pad,
            w + 2 * pad
        )));
    }
    Ok((c_in, h, w, c_out, kh, kw))
}

/// 2-D cross-correlation with per-filter bias, stride 1.
///
/// `input` is `C_in×H×W`, `weights` `C_out×C_in×KH×KW`; the output is
/// `C_out×H'×W'` with `H' = H + 2·pad − KH + 1`.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    pad: usize,
) -> Result<Tensor<T>, NnError> {
    let (c_in, h, w, c_out, kh, kw) = check_conv_shapes(input, weights, bias, pad)?;
    let oh_n = h + 2 * pad - kh + 1;
    let ow_n = w + 2 * pad - kw + 1;
    let mut out = Tensor::zeros(&[c_out, oh_n, ow_n]);

    let x = input.data();
    let wt = weights.data();
    let b = bias.data();
    let o = out.data_mut();
    for co in 0..c_out {
        let o_base = co * oh_n * ow_n;
        for ci in 0..c_in {
            let x_base = ci * h * w;
            let w_base = (co * c_in + ci) * kh * kw;
            for kr in 0..kh {
                // output rows whose source row kr lands inside the input
                let oh_lo = pad.saturating_sub(kr);
                let oh_hi = (h + pad).saturating_sub(kr).min(oh_n);
                for kc in 0..kw {
                    let wv = wt[w_base + kr * kw + kc];
                    let ow_lo = pad.saturating_sub(kc);
                    let ow_hi = (w + pad).saturating_sub(kc).min(ow_n);
                    if ow_lo >= ow_hi {
                        continue;
                    }
                    for oh in oh_lo..oh_hi {
                        let ih = oh + kr - pad;
                        let o_row = o_base + oh * ow_n;
                        let x_row = x_base + ih * w + ow_lo + kc - pad;
                        let dst = &mut o[o_row + ow_lo..o_row + ow_hi];
                        let src = &x[x_row..x_row + (ow_hi - ow_lo)];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d = *d + wv * *s;
                        }
                    }
                }
            }
        }
        let bv = b[co];
        for v in &mut o[o_base..o_base + oh_n * ow_n] {
            *v = *v + bv;
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d`] w.r.t. input, weights and bias.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
    pad: usize,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
    let (c_in, h, w) = dims3(input, "conv input")?;
    let (c_out, w_in, kh, kw) = dims4(weights, "conv weights")?;
    if w_in != c_in {
        return Err(NnError::ShapeMismatch(format!(
            "conv backward: input has {c_in} channels, weights expect {w_in}"
        )));
    }
    let oh_n = h + 2 * pad - kh + 1;
    let ow_n = w + 2 * pad - kw + 1;
    if grad_out.shape() != [c_out, oh_n, ow_n] {
        return Err(NnError::ShapeMismatch(format!(
            "conv backward: gradient shape {:?}, expected {:?}",
            grad_out.shape(),
            [c_out, oh_n, ow_n]
        )));
    }

    let mut dx = Tensor::zeros(&[c_in, h, w]);
    let mut dw = Tensor::zeros(&[c_out, c_in, kh, kw]);
    let mut db = Tensor::zeros(&[c_out]);

    let x = input.data();
    let wt = weights.data();
    let g = grad_out.data();
    {
        let db = db.data_mut();
        for co in 0..c_out {
            let g_plane = &g[co * oh_n * ow_n..(co + 1) * oh_n * ow_n];
            db[co] = g_plane.iter().copied().sum();
        }
    }

    let dx_data = dx.data_mut();
    let dw_data = dw.data_mut();
    for co in 0..c_out {
        let o_base = co * oh_n * ow_n;
        for ci in 0..c_in {
            let x_base = ci * h * w;
            let w_base = (co * c_in + ci) * kh * kw;
            for kr in 0..kh {
                let oh_lo = pad.saturating_sub(kr);
                let oh_hi = (h + pad).saturating_sub(kr).min(oh_n);
                for kc in 0..kw {
                    let wv = wt[w_base + kr * kw + kc];
                    let ow_lo = pad.saturating_sub(kc);
                    let ow_hi = (w + pad).saturating_sub(kc).min(ow_n);
                    if ow_lo >= ow_hi {
                        continue;
                    }
                    let mut acc = T::zero();
                    for oh in oh_lo..oh_hi {
                        let ih = oh + kr - pad;
                        let o_row = o_base + oh * ow_n;
                        let x_row = x_base + ih * w + ow_lo + kc - pad;
                        let len = ow_hi - ow_lo;
                        let g_row = &g[o_row + ow_lo..o_row + ow_hi];
                        let x_slice = &x[x_row..x_row + len];
                        let dx_slice = &mut dx_data[x_row..x_row + len];
                        for i in 0..len {
                            acc = acc + g_row[i] * x_slice[i];
                            dx_slice[i] = dx_slice[i] + wv * g_row[i];
                        }
                    }
                    dw_data[w_base + kr * kw + kc] = acc;
                }
            }
        }
    }
    Ok((dx, dw, db))
}

/// 2×2 max pooling with stride 2.
///
/// Returns the pooled tensor and, per output element, the flat index of its
/// source element (ties resolved to the first maximal element in row-major
/// window order) for use by [`maxpool2_backward`].
pub fn maxpool2<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>), NnError> {
    let (c_n, h, w) = dims3(input, "pool input")?;
    if h % 2 != 0 {
        return Err(NnError::OddDimension(h));
    }
    if w % 2 != 0 {
        return Err(NnError::OddDimension(w));
    }
    let (oh_n, ow_n) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[c_n, oh_n, ow_n]);
    let mut argmax = vec![0usize; c_n * oh_n * ow_n];

    let x = input.data();
    let o = out.data_mut();
    for c in 0..c_n {
        for oh in 0..oh_n {
            for ow in 0..ow_n {
                let base = c * h * w + (2 * oh) * w + 2 * ow;
                let window = [base, base + 1, base + w, base + w + 1];
                let mut best = window[0];
                for &i in &window[1..] {
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                let out_i = c * oh_n * ow_n + oh * ow_n + ow;
                o[out_i] = x[best];
                argmax[out_i] = best;
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each upstream gradient to the argmax position of its window.
pub fn maxpool2_backward<T: Scalar>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if grad_out.len() != argmax.len() {
        return Err(NnError::ShapeMismatch(format!(
            "pool backward: {} gradients vs {} argmax entries",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut dx = Tensor::zeros(input_shape);
    let d = dx.data_mut();
    for (g, &src) in grad_out.data().iter().zip(argmax) {
        d[src] = d[src] + *g;
    }
    Ok(dx)
}

/// Affine layer: `y = W·x + b` with `W` of shape `[out, in]`.
pub fn dense<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let (out_n, in_n) = match *weights.shape() {
        [o, i] => (o, i),
        ref s => {
            return Err(NnError::ShapeMismatch(format!(
                "dense weights: expected rank 2, got {s:?}"
            )))
        }
    };
    if input.len() != in_n {
        return Err(NnError::ShapeMismatch(format!(
            "dense: input length {} vs weight columns {in_n}",
            input.len()
        )));
    }
    if bias.len() != out_n {
        return Err(NnError::ShapeMismatch(format!(
            "dense: {out_n} rows but {} bias values",
            bias.len()
        )));
    }
    let x = input.data();
    let wt = weights.data();
    let mut out = bias.data().to_vec();
    for (o, row) in out.iter_mut().zip(wt.chunks_exact(in_n)) {
        let mut acc = T::zero();
        for (wv, xv) in row.iter().zip(x) {
            acc = acc + *wv * *xv;
        }
        *o = *o + acc;
    }
    Tensor::from_vec(&[out_n], out)
}

/// Gradients of [`dense`] w.r.t. input, weights and bias.
pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
    let (out_n, in_n) = match *weights.shape() {
        [o, i] => (o, i),
        ref s => {
            return Err(NnError::ShapeMismatch(format!(
                "dense weights: expected rank 2, got {s:?}"
            )))
        }
    };
    if input.len() != in_n || grad_out.len() != out_n {
        return Err(NnError::ShapeMismatch(format!(
            "dense backward: input {} / grad {} vs weights {out_n}x{in_n}",
            input.len(),
            grad_out.len()
        )));
    }
    let x = input.data();
    let wt = weights.data();
    let g = grad_out.data();

    let mut dx = Tensor::zeros(&[in_n]);
    let mut dw = Tensor::zeros(&[out_n, in_n]);
    {
        let dx = dx.data_mut();
        let dw = dw.data_mut();
        for o in 0..out_n {
            let gv = g[o];
            let w_row = &wt[o * in_n..(o + 1) * in_n];
            let dw_row = &mut dw[o * in_n..(o + 1) * in_n];
            for i in 0..in_n {
                dx[i] = dx[i] + gv * w_row[i];
                dw_row[i] = gv * x[i];
            }
        }
    }
    let db = Tensor::from_vec(&[out_n], g.to_vec())?;
    Ok((dx, dw, db))
}

/// Elementwise `max(v, 0)`.
pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    out
}

/// ReLU gradient: passes where the forward input was strictly positive.
/// The subgradient at exactly 0 is taken as 0.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    if !input.same_shape(grad_out) {
        return Err(NnError::ShapeMismatch(format!(
            "relu backward: {:?} vs {:?}",
            input.shape(),
            grad_out.shape()
        )));
    }
    let mut out = grad_out.clone();
    for (g, x) in out.data_mut().iter_mut().zip(input.data()) {
        if *x <= T::zero() {
            *g = T::zero();
        }
    }
    Ok(out)
}
