//! Layer forward/backward passes, loss, and the SGD update.
//!
//! All operations are pure: they borrow their inputs, return fresh tensors,
//! and keep no hidden state (max-pool argmax is returned to the caller). For
//! one output cell, contributions accumulate in `(channel, ky, kx)` order, so
//! results are bitwise reproducible regardless of worker count.

use crate::engine::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Convolution parameters: weights `[K, C, kh, kw]`, bias `[K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Fully-connected parameters: weights `[out, in]`, bias `[out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FcParams<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Parameters of one layer; a network holds a list of these.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams<T> {
    Conv(ConvParams<T>),
    Fc(FcParams<T>),
}

impl<T: Scalar> LayerParams<T> {
    pub fn weights(&self) -> &Tensor<T> {
        match self {
            LayerParams::Conv(p) => &p.weights,
            LayerParams::Fc(p) => &p.weights,
        }
    }

    pub fn bias(&self) -> &Tensor<T> {
        match self {
            LayerParams::Conv(p) => &p.bias,
            LayerParams::Fc(p) => &p.bias,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weights().len() + self.bias().len()
    }
}

/// Gradients for one layer plus the gradient flowing to its input.
#[derive(Debug, Clone)]
pub struct GradientBundle<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub input: Tensor<T>,
}

fn conv_dims<T: Scalar>(params: &ConvParams<T>) -> Result<(usize, usize, usize, usize)> {
    match params.weights.shape()[..] {
        [k, c, kh, kw] => {
            if params.bias.shape() != [k] {
                return Err(Error::dimension(
                    "conv2d",
                    format!("bias length {} != output channels {k}", params.bias.len()),
                ));
            }
            Ok((k, c, kh, kw))
        }
        _ => Err(Error::dimension(
            "conv2d",
            format!(
                "weights must be [K,C,kh,kw], got shape {:?}",
                params.weights.shape()
            ),
        )),
    }
}

fn out_extent(axis: &str, input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::config("conv2d: stride must be positive"));
    }
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::config(format!(
            "conv2d: kernel {kernel} exceeds padded {axis} extent {padded}"
        )));
    }
    let span = padded - kernel;
    if span % stride != 0 {
        return Err(Error::config(format!(
            "conv2d: non-integer output extent on {axis}: ({input} + 2*{padding} - {kernel}) not divisible by stride {stride}"
        )));
    }
    Ok(span / stride + 1)
}

/// 2-D cross-correlation of a `[C,H,W]` input with `K` filters.
///
/// `out[k,y,x] = bias[k] + Σ_{c,i,j} input[c, y·s+i−p, x·s+j−p] · weights[k,c,i,j]`
/// with zero padding outside the input.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    let (c_in, h, w) = input.dims3("conv2d_forward")?;
    let (k, c_w, kh, kw) = conv_dims(params)?;
    if c_w != c_in {
        return Err(Error::dimension(
            "conv2d_forward",
            format!("input channel axis is {c_in}, weights expect {c_w}"),
        ));
    }
    let h_out = out_extent("height", h, kh, stride, padding)?;
    let w_out = out_extent("width", w, kw, stride, padding)?;

    let mut out = Tensor::zeros(&[k, h_out, w_out]);
    let wdat = params.weights.data();
    let bdat = params.bias.data();
    let idat = input.data();
    let odat = out.data_mut();
    let pad = padding as isize;

    for ko in 0..k {
        let o_base = ko * h_out * w_out;
        odat[o_base..o_base + h_out * w_out].fill(bdat[ko]);
        for c in 0..c_in {
            let i_base = c * h * w;
            for i in 0..kh {
                for j in 0..kw {
                    let wgt = wdat[((ko * c_in + c) * kh + i) * kw + j];
                    let j_off = j as isize - pad;
                    for y in 0..h_out {
                        let iy = (y * stride + i) as isize - pad;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let in_row = &idat[i_base + iy as usize * w..i_base + (iy as usize + 1) * w];
                        let out_row = &mut odat[o_base + y * w_out..o_base + (y + 1) * w_out];
                        if stride == 1 {
                            // ix = x + j_off stays in [0, w)
                            let x0 = (-j_off).max(0) as usize;
                            let x1 = ((w as isize - j_off).min(w_out as isize)).max(0) as usize;
                            if x0 >= x1 {
                                continue;
                            }
                            let src = &in_row[(x0 as isize + j_off) as usize..];
                            for (o, s) in out_row[x0..x1].iter_mut().zip(src) {
                                *o = *o + wgt * *s;
                            }
                        } else {
                            for (x, o) in out_row.iter_mut().enumerate() {
                                let ix = (x * stride) as isize + j_off;
                                if ix >= 0 && ix < w as isize {
                                    *o = *o + wgt * in_row[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of the convolution with respect to weights, bias, and input.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    params: &ConvParams<T>,
    upstream: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<GradientBundle<T>> {
    let (c_in, h, w) = input.dims3("conv2d_backward")?;
    let (k, c_w, kh, kw) = conv_dims(params)?;
    if c_w != c_in {
        return Err(Error::dimension(
            "conv2d_backward",
            format!("input channel axis is {c_in}, weights expect {c_w}"),
        ));
    }
    let h_out = out_extent("height", h, kh, stride, padding)?;
    let w_out = out_extent("width", w, kw, stride, padding)?;
    if upstream.shape() != [k, h_out, w_out] {
        return Err(Error::dimension(
            "conv2d_backward",
            format!(
                "upstream shape {:?} != forward output [{k}, {h_out}, {w_out}]",
                upstream.shape()
            ),
        ));
    }

    let mut d_weights = Tensor::zeros(params.weights.shape());
    let mut d_bias = Tensor::zeros(params.bias.shape());
    let mut d_input = Tensor::zeros(input.shape());
    let idat = input.data();
    let wdat = params.weights.data();
    let udat = upstream.data();
    let pad = padding as isize;

    for ko in 0..k {
        let u_base = ko * h_out * w_out;
        let mut b_acc = T::zero();
        for u in &udat[u_base..u_base + h_out * w_out] {
            b_acc = b_acc + *u;
        }
        d_bias.data_mut()[ko] = b_acc;

        for c in 0..c_in {
            let i_base = c * h * w;
            for i in 0..kh {
                for j in 0..kw {
                    let w_idx = ((ko * c_in + c) * kh + i) * kw + j;
                    let wgt = wdat[w_idx];
                    let j_off = j as isize - pad;
                    let mut w_acc = T::zero();
                    for y in 0..h_out {
                        let iy = (y * stride + i) as isize - pad;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = i_base + iy as usize * w;
                        let up_row = &udat[u_base + y * w_out..u_base + (y + 1) * w_out];
                        if stride == 1 {
                            let x0 = (-j_off).max(0) as usize;
                            let x1 = ((w as isize - j_off).min(w_out as isize)).max(0) as usize;
                            if x0 >= x1 {
                                continue;
                            }
                            let src0 = (x0 as isize + j_off) as usize;
                            let din_row = &mut d_input.data_mut()[row + src0..row + src0 + (x1 - x0)];
                            let in_row = &idat[row + src0..row + src0 + (x1 - x0)];
                            for ((u, s), d) in up_row[x0..x1].iter().zip(in_row).zip(din_row) {
                                w_acc = w_acc + *u * *s;
                                *d = *d + wgt * *u;
                            }
                        } else {
                            for (x, u) in up_row.iter().enumerate() {
                                let ix = (x * stride) as isize + j_off;
                                if ix >= 0 && ix < w as isize {
                                    let idx = row + ix as usize;
                                    w_acc = w_acc + *u * idat[idx];
                                    let d = &mut d_input.data_mut()[idx];
                                    *d = *d + wgt * *u;
                                }
                            }
                        }
                    }
                    d_weights.data_mut()[w_idx] = w_acc;
                }
            }
        }
    }
    Ok(GradientBundle {
        weights: d_weights,
        bias: d_bias,
        input: d_input,
    })
}

/// Argmax bookkeeping from a max-pool forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct PoolIndices {
    input_shape: Vec<usize>,
    output_shape: Vec<usize>,
    argmax: Vec<usize>,
}

impl PoolIndices {
    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }
}

/// Max pooling over `window`×`window` patches. Ties break toward the lowest
/// flat index so backward routing is deterministic.
pub fn maxpool_forward<T: Scalar>(
    input: &Tensor<T>,
    window: usize,
    stride: usize,
) -> Result<(Tensor<T>, PoolIndices)> {
    let (c, h, w) = input.dims3("maxpool_forward")?;
    if window == 0 || stride == 0 {
        return Err(Error::config("maxpool: window and stride must be positive"));
    }
    if window > h || window > w {
        return Err(Error::config(format!(
            "maxpool: window {window} larger than input {h}x{w}"
        )));
    }
    let h_out = (h - window) / stride + 1;
    let w_out = (w - window) / stride + 1;

    let mut out = Tensor::zeros(&[c, h_out, w_out]);
    let mut argmax = vec![0usize; c * h_out * w_out];
    let idat = input.data();
    let odat = out.data_mut();

    for ch in 0..c {
        let i_base = ch * h * w;
        for y in 0..h_out {
            for x in 0..w_out {
                let mut best_idx = i_base + (y * stride) * w + x * stride;
                let mut best = idat[best_idx];
                for dy in 0..window {
                    let row = i_base + (y * stride + dy) * w + x * stride;
                    for dx in 0..window {
                        let v = idat[row + dx];
                        if v > best {
                            best = v;
                            best_idx = row + dx;
                        }
                    }
                }
                let o = (ch * h_out + y) * w_out + x;
                odat[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
    Ok((
        out,
        PoolIndices {
            input_shape: vec![c, h, w],
            output_shape: vec![c, h_out, w_out],
            argmax,
        },
    ))
}

/// Routes each upstream value to the argmax position recorded by the forward pass.
pub fn maxpool_backward<T: Scalar>(indices: &PoolIndices, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    if upstream.shape() != indices.output_shape {
        return Err(Error::dimension(
            "maxpool_backward",
            format!(
                "upstream shape {:?} does not match pooled shape {:?} (stale indices?)",
                upstream.shape(),
                indices.output_shape
            ),
        ));
    }
    let mut grad = Tensor::zeros(&indices.input_shape);
    let gdat = grad.data_mut();
    for (&idx, &u) in indices.argmax.iter().zip(upstream.data()) {
        gdat[idx] = gdat[idx] + u;
    }
    Ok(grad)
}

/// Affine map `out = W·input + bias`. The input is used flattened.
pub fn fc_forward<T: Scalar>(input: &Tensor<T>, params: &FcParams<T>) -> Result<Tensor<T>> {
    let (n_out, n_in) = match params.weights.shape()[..] {
        [o, i] => (o, i),
        _ => {
            return Err(Error::dimension(
                "fc_forward",
                format!("weights must be [out,in], got {:?}", params.weights.shape()),
            ))
        }
    };
    if params.bias.shape() != [n_out] {
        return Err(Error::dimension(
            "fc_forward",
            format!("bias length {} != out units {n_out}", params.bias.len()),
        ));
    }
    if input.len() != n_in {
        return Err(Error::dimension(
            "fc_forward",
            format!("flattened input length {} != in units {n_in}", input.len()),
        ));
    }
    let mut out = Tensor::zeros(&[n_out]);
    let idat = input.data();
    let wdat = params.weights.data();
    for (o, slot) in out.data_mut().iter_mut().enumerate() {
        let row = &wdat[o * n_in..(o + 1) * n_in];
        let mut acc = params.bias.data()[o];
        for (wv, iv) in row.iter().zip(idat) {
            acc = acc + *wv * *iv;
        }
        *slot = acc;
    }
    Ok(out)
}

/// Gradients of the affine map. The input gradient comes back flattened.
pub fn fc_backward<T: Scalar>(
    input: &Tensor<T>,
    params: &FcParams<T>,
    upstream: &Tensor<T>,
) -> Result<GradientBundle<T>> {
    let (n_out, n_in) = match params.weights.shape()[..] {
        [o, i] => (o, i),
        _ => {
            return Err(Error::dimension(
                "fc_backward",
                format!("weights must be [out,in], got {:?}", params.weights.shape()),
            ))
        }
    };
    if input.len() != n_in {
        return Err(Error::dimension(
            "fc_backward",
            format!("flattened input length {} != in units {n_in}", input.len()),
        ));
    }
    if upstream.len() != n_out {
        return Err(Error::dimension(
            "fc_backward",
            format!("upstream length {} != out units {n_out}", upstream.len()),
        ));
    }
    let mut d_weights = Tensor::zeros(params.weights.shape());
    let d_bias = Tensor::from_vec(&[n_out], upstream.data().to_vec())?;
    let mut d_input = Tensor::zeros(&[n_in]);
    let idat = input.data();
    let wdat = params.weights.data();
    let ddat = d_input.data_mut();
    for (o, &u) in upstream.data().iter().enumerate() {
        let w_row = &wdat[o * n_in..(o + 1) * n_in];
        let dw_row = &mut d_weights.data_mut()[o * n_in..(o + 1) * n_in];
        for ((dw, iv), (d, wv)) in dw_row.iter_mut().zip(idat).zip(ddat.iter_mut().zip(w_row)) {
            *dw = u * *iv;
            *d = *d + u * *wv;
        }
    }
    Ok(GradientBundle {
        weights: d_weights,
        bias: d_bias,
        input: d_input,
    })
}

/// Elementwise `max(0, x)`.
pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let mut out = input.clone();
    for v in out.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
    out
}

/// Passes upstream gradient where the forward input was positive, zero elsewhere.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, upstream: &Tensor<T>) -> Tensor<T> {
    assert_eq!(
        input.shape(),
        upstream.shape(),
        "relu_backward: shape mismatch"
    );
    let mut out = upstream.clone();
    for (o, i) in out.data_mut().iter_mut().zip(input.data()) {
        if *i <= T::zero() {
            *o = T::zero();
        }
    }
    out
}

/// Softmax cross-entropy with max-subtraction for overflow safety.
///
/// Returns `(loss, probabilities, gradient at the logits)` where the gradient
/// is `probs − onehot(label)`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    label: usize,
) -> Result<(T, Tensor<T>, Tensor<T>)> {
    let n = logits.len();
    if label >= n {
        return Err(Error::Label { label, classes: n });
    }
    let mut max = logits.data()[0];
    for v in logits.data() {
        if *v > max {
            max = *v;
        }
    }
    let mut probs = Tensor::zeros(&[n]);
    let mut sum = T::zero();
    for (p, z) in probs.data_mut().iter_mut().zip(logits.data()) {
        *p = (*z - max).exp();
        sum = sum + *p;
    }
    let inv = T::one() / sum;
    for p in probs.data_mut() {
        *p = *p * inv;
    }
    let loss = sum.ln() - (logits.data()[label] - max);
    let mut grad = probs.clone();
    grad.data_mut()[label] = grad.data()[label] - T::one();
    Ok((loss, probs, grad))
}

/// In-place SGD update `p ← p − lr·g` over a whole parameter list.
///
/// `lr = 0` is the identity; negative learning rates are rejected.
pub fn sgd_step<T: Scalar>(
    params: &mut [LayerParams<T>],
    grads: &[GradientBundle<T>],
    lr: T,
) -> Result<()> {
    if lr < T::zero() {
        return Err(Error::config(format!("sgd_step: negative learning rate {lr}")));
    }
    if params.len() != grads.len() {
        return Err(Error::dimension(
            "sgd_step",
            format!("{} parameter layers vs {} gradient layers", params.len(), grads.len()),
        ));
    }
    for (p, g) in params.iter_mut().zip(grads) {
        let (w, b) = match p {
            LayerParams::Conv(c) => (&mut c.weights, &mut c.bias),
            LayerParams::Fc(f) => (&mut f.weights, &mut f.bias),
        };
        if w.shape() != g.weights.shape() || b.shape() != g.bias.shape() {
            return Err(Error::dimension(
                "sgd_step",
                format!(
                    "gradient shapes {:?}/{:?} do not match parameter shapes {:?}/{:?}",
                    g.weights.shape(),
                    g.bias.shape(),
                    w.shape(),
                    b.shape()
                ),
            ));
        }
        for (pv, gv) in w.data_mut().iter_mut().zip(g.weights.data()) {
            *pv = *pv - lr * *gv;
        }
        for (pv, gv) in b.data_mut().iter_mut().zip(g.bias.data()) {
            *pv = *pv - lr * *gv;
        }
    }
    Ok(())
}

/// Sums gradient bundles elementwise; used for fixed-order batch reduction.
pub fn accumulate_grads<T: Scalar>(acc: &mut Vec<GradientBundle<T>>, item: &[GradientBundle<T>]) {
    if acc.is_empty() {
        acc.extend_from_slice(item);
        return;
    }
    assert_eq!(acc.len(), item.len(), "gradient layer count mismatch");
    for (a, b) in acc.iter_mut().zip(item) {
        for (x, y) in a.weights.data_mut().iter_mut().zip(b.weights.data()) {
            *x = *x + *y;
        }
        for (x, y) in a.bias.data_mut().iter_mut().zip(b.bias.data()) {
            *x = *x + *y;
        }
    }
}

/// Scales every gradient in the list, e.g. by `1/batch`.
pub fn scale_grads<T: Scalar>(grads: &mut [GradientBundle<T>], factor: T) {
    for g in grads {
        for v in g.weights.data_mut() {
            *v = *v * factor;
        }
        for v in g.bias.data_mut() {
            *v = *v * factor;
        }
    }
}
