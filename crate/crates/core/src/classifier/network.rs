//! Forward and backward passes, batched through im2col and GEMM.
//!
//! Pipeline per image: `(v - 0.5) / 0.5` normalization, 3x3 conv to 16
//! channels (zero padding 1), ReLU, 2x2 max-pool, 3x3 conv to 32
//! channels, ReLU, 2x2 max-pool, flatten (channel-major, 32 * 7 * 7 =
//! 1568), dense 128, ReLU, dense 10, softmax.
//!
//! Activations are kept in `position x channel` layout so every layer is a
//! single matrix product over the whole batch.

use super::gemm::{gemm, View};
use super::params::{NetworkParams, Tensor};
use super::softmax::softmax_unchecked;
use crate::data::{argmax, ImageTensor, NUM_CLASSES};
use crate::error::{Error, Result};

pub const IMAGE_SIDE: usize = 28;
const PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
const C1: usize = 16;
const C2: usize = 32;
const SIDE2: usize = IMAGE_SIDE / 2;
const SIDE3: usize = SIDE2 / 2;
const POS2: usize = SIDE2 * SIDE2;
const POS3: usize = SIDE3 * SIDE3;
const K1: usize = 9;
const K2: usize = C1 * 9;
const FLAT: usize = C2 * POS3;
const HIDDEN: usize = 128;

/// Network output for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl Forward {
    pub fn predicted(&self) -> usize {
        argmax(&self.probabilities)
    }
}

fn check_shape(image: &ImageTensor) -> Result<()> {
    if image.height() != IMAGE_SIDE || image.width() != IMAGE_SIDE {
        return Err(Error::ShapeMismatch(format!(
            "expected a {IMAGE_SIDE}x{IMAGE_SIDE} image, got {}x{}",
            image.height(),
            image.width()
        )));
    }
    Ok(())
}

/// 3x3, stride 1, zero padding 1 patches of an `side x side x channels`
/// batch. Column index is `channel * 9 + ky * 3 + kx`.
fn im2col(input: &[f64], batch: usize, side: usize, channels: usize, cols: &mut [f64]) {
    let width = channels * 9;
    cols.fill(0.0);
    for b in 0..batch {
        for y in 0..side {
            for x in 0..side {
                let row = &mut cols[((b * side + y) * side + x) * width..][..width];
                for ky in 0..3 {
                    let iy = y + ky;
                    if iy == 0 || iy > side {
                        continue;
                    }
                    for kx in 0..3 {
                        let ix = x + kx;
                        if ix == 0 || ix > side {
                            continue;
                        }
                        let src = &input[((b * side + iy - 1) * side + ix - 1) * channels..][..channels];
                        for (c, &v) in src.iter().enumerate() {
                            row[c * 9 + ky * 3 + kx] = v;
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add patch gradients back to the input.
fn col2im(cols: &[f64], batch: usize, side: usize, channels: usize, grad: &mut [f64]) {
    let width = channels * 9;
    grad.fill(0.0);
    for b in 0..batch {
        for y in 0..side {
            for x in 0..side {
                let row = &cols[((b * side + y) * side + x) * width..][..width];
                for ky in 0..3 {
                    let iy = y + ky;
                    if iy == 0 || iy > side {
                        continue;
                    }
                    for kx in 0..3 {
                        let ix = x + kx;
                        if ix == 0 || ix > side {
                            continue;
                        }
                        let dst = &mut grad[((b * side + iy - 1) * side + ix - 1) * channels..][..channels];
                        for (c, d) in dst.iter_mut().enumerate() {
                            *d += row[c * 9 + ky * 3 + kx];
                        }
                    }
                }
            }
        }
    }
}

/// 2x2 stride-2 max-pool. `arg` receives the source row of each maximum;
/// the first maximal element in row-major window order wins.
fn max_pool(input: &[f64], batch: usize, side: usize, channels: usize, out: &mut [f64], arg: &mut [u32]) {
    let half = side / 2;
    for b in 0..batch {
        for oy in 0..half {
            for ox in 0..half {
                let orow = (b * half + oy) * half + ox;
                for c in 0..channels {
                    let mut best_row = (b * side + 2 * oy) * side + 2 * ox;
                    let mut best = input[best_row * channels + c];
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let row = (b * side + 2 * oy + dy) * side + 2 * ox + dx;
                        let v = input[row * channels + c];
                        if v > best {
                            best = v;
                            best_row = row;
                        }
                    }
                    out[orow * channels + c] = best;
                    arg[orow * channels + c] = best_row as u32;
                }
            }
        }
    }
}

fn fill_bias(out: &mut [f64], bias: &[f64]) {
    for row in out.chunks_exact_mut(bias.len()) {
        row.copy_from_slice(bias);
    }
}

fn relu(values: &mut [f64]) {
    for v in values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn column_sums(values: &[f64], cols: usize, out: &mut [f64]) {
    out.fill(0.0);
    for row in values.chunks_exact(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

/// Reusable activation and gradient buffers for one batch size.
#[derive(Default)]
pub(crate) struct Workspace {
    batch: usize,
    cols1: Vec<f64>,
    act1: Vec<f64>,
    pool1: Vec<f64>,
    arg1: Vec<u32>,
    cols2: Vec<f64>,
    act2: Vec<f64>,
    pool2: Vec<f64>,
    arg2: Vec<u32>,
    flat: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
    // backward scratch
    d_logits: Vec<f64>,
    d_hidden: Vec<f64>,
    d_flat: Vec<f64>,
    d_act2: Vec<f64>,
    d_cols2: Vec<f64>,
    d_pool1: Vec<f64>,
    d_act1: Vec<f64>,
}

impl Workspace {
    fn resize(&mut self, batch: usize, with_backward: bool) {
        self.batch = batch;
        let n1 = batch * PIXELS;
        let n2 = batch * POS2;
        let n3 = batch * POS3;
        self.cols1.resize(n1 * K1, 0.0);
        self.act1.resize(n1 * C1, 0.0);
        self.pool1.resize(n2 * C1, 0.0);
        self.arg1.resize(n2 * C1, 0);
        self.cols2.resize(n2 * K2, 0.0);
        self.act2.resize(n2 * C2, 0.0);
        self.pool2.resize(n3 * C2, 0.0);
        self.arg2.resize(n3 * C2, 0);
        self.flat.resize(batch * FLAT, 0.0);
        self.hidden.resize(batch * HIDDEN, 0.0);
        self.logits.resize(batch * NUM_CLASSES, 0.0);
        if with_backward {
            self.d_logits.resize(batch * NUM_CLASSES, 0.0);
            self.d_hidden.resize(batch * HIDDEN, 0.0);
            self.d_flat.resize(batch * FLAT, 0.0);
            self.d_act2.resize(n2 * C2, 0.0);
            self.d_cols2.resize(n2 * K2, 0.0);
            self.d_pool1.resize(n2 * C1, 0.0);
            self.d_act1.resize(n1 * C1, 0.0);
        }
    }

    /// Run the batch forward; logits land in `self.logits`.
    pub(crate) fn forward(&mut self, params: &NetworkParams, images: &[&ImageTensor], with_backward: bool) -> Result<()> {
        for im in images {
            check_shape(im)?;
        }
        let batch = images.len();
        self.resize(batch, with_backward);

        // Normalized input doubles as the single-channel conv1 input.
        let mut input = vec![0.0; batch * PIXELS];
        for (dst, im) in input.chunks_exact_mut(PIXELS).zip(images) {
            for (d, &v) in dst.iter_mut().zip(im.pixels()) {
                *d = (v - 0.5) / 0.5;
            }
        }

        im2col(&input, batch, IMAGE_SIDE, 1, &mut self.cols1);
        fill_bias(&mut self.act1, params.tensor(Tensor::Conv1Bias));
        gemm(
            batch * PIXELS,
            K1,
            C1,
            View::rows(&self.cols1, K1),
            View::transposed(params.tensor(Tensor::Conv1Weight), K1),
            1.0,
            &mut self.act1,
        );
        relu(&mut self.act1);
        max_pool(&self.act1, batch, IMAGE_SIDE, C1, &mut self.pool1, &mut self.arg1);

        im2col(&self.pool1, batch, SIDE2, C1, &mut self.cols2);
        fill_bias(&mut self.act2, params.tensor(Tensor::Conv2Bias));
        gemm(
            batch * POS2,
            K2,
            C2,
            View::rows(&self.cols2, K2),
            View::transposed(params.tensor(Tensor::Conv2Weight), K2),
            1.0,
            &mut self.act2,
        );
        relu(&mut self.act2);
        max_pool(&self.act2, batch, SIDE2, C2, &mut self.pool2, &mut self.arg2);

        for b in 0..batch {
            let flat = &mut self.flat[b * FLAT..][..FLAT];
            for pos in 0..POS3 {
                for c in 0..C2 {
                    flat[c * POS3 + pos] = self.pool2[(b * POS3 + pos) * C2 + c];
                }
            }
        }

        fill_bias(&mut self.hidden, params.tensor(Tensor::Fc1Bias));
        gemm(
            batch,
            FLAT,
            HIDDEN,
            View::rows(&self.flat, FLAT),
            View::transposed(params.tensor(Tensor::Fc1Weight), FLAT),
            1.0,
            &mut self.hidden,
        );
        relu(&mut self.hidden);

        fill_bias(&mut self.logits, params.tensor(Tensor::Fc2Bias));
        gemm(
            batch,
            HIDDEN,
            NUM_CLASSES,
            View::rows(&self.hidden, HIDDEN),
            View::transposed(params.tensor(Tensor::Fc2Weight), HIDDEN),
            1.0,
            &mut self.logits,
        );
        Ok(())
    }

    pub(crate) fn logits(&self) -> &[f64] {
        &self.logits[..self.batch * NUM_CLASSES]
    }

    /// Mean cross-entropy of the last forward batch and its gradient.
    /// Returns `(loss, correct predictions)`.
    pub(crate) fn backward(&mut self, params: &NetworkParams, labels: &[u8], grad: &mut NetworkParams) -> (f64, usize) {
        let batch = self.batch;
        let scale = 1.0 / batch as f64;
        let mut loss = 0.0;
        let mut correct = 0;
        for b in 0..batch {
            let z = &self.logits[b * NUM_CLASSES..][..NUM_CLASSES];
            let label = labels[b] as usize;
            // Fused log-softmax: -log p_y = logsumexp(z) - z_y.
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
            loss += max + sum.ln() - z[label];
            if argmax(z) == label {
                correct += 1;
            }
            let dz = &mut self.d_logits[b * NUM_CLASSES..][..NUM_CLASSES];
            for (i, d) in dz.iter_mut().enumerate() {
                let p = (z[i] - max).exp() / sum;
                *d = scale * (p - if i == label { 1.0 } else { 0.0 });
            }
        }
        loss *= scale;

        // fc2
        gemm(
            NUM_CLASSES,
            batch,
            HIDDEN,
            View::transposed(&self.d_logits, NUM_CLASSES),
            View::rows(&self.hidden, HIDDEN),
            0.0,
            grad.tensor_mut(Tensor::Fc2Weight),
        );
        column_sums(&self.d_logits, NUM_CLASSES, grad.tensor_mut(Tensor::Fc2Bias));
        gemm(
            batch,
            NUM_CLASSES,
            HIDDEN,
            View::rows(&self.d_logits, NUM_CLASSES),
            View::rows(params.tensor(Tensor::Fc2Weight), HIDDEN),
            0.0,
            &mut self.d_hidden,
        );
        for (d, &h) in self.d_hidden.iter_mut().zip(&self.hidden) {
            if h <= 0.0 {
                *d = 0.0;
            }
        }

        // fc1
        gemm(
            HIDDEN,
            batch,
            FLAT,
            View::transposed(&self.d_hidden, HIDDEN),
            View::rows(&self.flat, FLAT),
            0.0,
            grad.tensor_mut(Tensor::Fc1Weight),
        );
        column_sums(&self.d_hidden, HIDDEN, grad.tensor_mut(Tensor::Fc1Bias));
        gemm(
            batch,
            HIDDEN,
            FLAT,
            View::rows(&self.d_hidden, HIDDEN),
            View::rows(params.tensor(Tensor::Fc1Weight), FLAT),
            0.0,
            &mut self.d_flat,
        );

        // unflatten, un-pool, ReLU mask
        self.d_act2.fill(0.0);
        for b in 0..batch {
            for pos in 0..POS3 {
                for c in 0..C2 {
                    let src_row = self.arg2[(b * POS3 + pos) * C2 + c] as usize;
                    self.d_act2[src_row * C2 + c] += self.d_flat[b * FLAT + c * POS3 + pos];
                }
            }
        }
        for (d, &a) in self.d_act2.iter_mut().zip(&self.act2) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }

        // conv2
        gemm(
            C2,
            batch * POS2,
            K2,
            View::transposed(&self.d_act2, C2),
            View::rows(&self.cols2, K2),
            0.0,
            grad.tensor_mut(Tensor::Conv2Weight),
        );
        column_sums(&self.d_act2, C2, grad.tensor_mut(Tensor::Conv2Bias));
        gemm(
            batch * POS2,
            C2,
            K2,
            View::rows(&self.d_act2, C2),
            View::rows(params.tensor(Tensor::Conv2Weight), K2),
            0.0,
            &mut self.d_cols2,
        );
        col2im(&self.d_cols2, batch, SIDE2, C1, &mut self.d_pool1);

        self.d_act1.fill(0.0);
        for (i, &src_row) in self.arg1.iter().enumerate() {
            let c = i % C1;
            self.d_act1[src_row as usize * C1 + c] += self.d_pool1[i];
        }
        for (d, &a) in self.d_act1.iter_mut().zip(&self.act1) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }

        // conv1 (no input gradient needed)
        gemm(
            C1,
            batch * PIXELS,
            K1,
            View::transposed(&self.d_act1, C1),
            View::rows(&self.cols1, K1),
            0.0,
            grad.tensor_mut(Tensor::Conv1Weight),
        );
        column_sums(&self.d_act1, C1, grad.tensor_mut(Tensor::Conv1Bias));

        (loss, correct)
    }
}

/// Logits and softmax for one image.
pub fn forward(params: &NetworkParams, image: &ImageTensor) -> Result<Forward> {
    Ok(forward_batch(params, &[image])?.remove(0))
}

/// Forward a batch in one pass.
pub fn forward_batch(params: &NetworkParams, images: &[&ImageTensor]) -> Result<Vec<Forward>> {
    if images.is_empty() {
        return Ok(Vec::new());
    }
    let mut ws = Workspace::default();
    ws.forward(params, images, false)?;
    Ok(ws
        .logits()
        .chunks_exact(NUM_CLASSES)
        .map(|z| Forward {
            logits: z.to_vec(),
            probabilities: softmax_unchecked(z),
        })
        .collect())
}

/// Mean cross-entropy over the batch and its gradient with respect to
/// every parameter.
pub fn loss_and_grad(params: &NetworkParams, images: &[&ImageTensor], labels: &[u8]) -> Result<(f64, NetworkParams)> {
    if images.is_empty() || images.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} images and {} labels",
            images.len(),
            labels.len()
        )));
    }
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l as usize >= NUM_CLASSES) {
        return Err(Error::LabelOutOfRange { index, value });
    }
    let mut ws = Workspace::default();
    ws.forward(params, images, true)?;
    let mut grad = NetworkParams::zeros();
    let (loss, _) = ws.backward(params, labels, &mut grad);
    Ok((loss, grad))
}
