//! Dense and 1-D convolution layers operating on single samples.

use rand::Rng;

use super::tensor::{axpy, dot, Tensor};

pub(crate) fn uniform(shape: &[usize], bound: f64, rng: &mut impl Rng) -> Tensor {
    let mut t = Tensor::zeros(shape);
    if bound > 0.0 {
        for v in t.data_mut() {
            *v = rng.random_range(-bound..bound);
        }
    }
    t
}

pub(crate) fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes gradient entries whose forward output was clamped by ReLU.
pub(crate) fn relu_backward(grad: &mut [f64], out: &[f64]) {
    for (g, &y) in grad.iter_mut().zip(out) {
        if y <= 0.0 {
            *g = 0.0;
        }
    }
}

/// `y = W x + b` applied to each row of a `[rows][in]` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `[out, in]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

impl Linear {
    pub fn new(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        Self { weight: uniform(&[output, input], bound, rng), bias: uniform(&[output], bound, rng) }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self { weight: Tensor::zeros(&[output, input]), bias: Tensor::zeros(&[output]) }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (n_in, n_out) = (self.input_dim(), self.output_dim());
        let rows = x.len() / n_in;
        let mut y = Vec::with_capacity(rows * n_out);
        let b = self.bias.data();
        for r in 0..rows {
            let xr = &x[r * n_in..(r + 1) * n_in];
            y.extend((0..n_out).map(|o| b[o] + dot(self.weight.row(o), xr)));
        }
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx` when
    /// `need_input` is set.
    pub fn backward(&self, x: &[f64], gy: &[f64], grad: &mut Linear, need_input: bool) -> Option<Vec<f64>> {
        let (n_in, n_out) = (self.input_dim(), self.output_dim());
        let rows = x.len() / n_in;
        for r in 0..rows {
            let xr = &x[r * n_in..(r + 1) * n_in];
            let gr = &gy[r * n_out..(r + 1) * n_out];
            let gw = grad.weight.data_mut();
            for (o, &g) in gr.iter().enumerate() {
                if g != 0.0 {
                    axpy(g, xr, &mut gw[o * n_in..(o + 1) * n_in]);
                }
            }
            axpy(1.0, gr, grad.bias.data_mut());
        }
        need_input.then(|| {
            let mut dx = vec![0.0; x.len()];
            for r in 0..rows {
                let gr = &gy[r * n_out..(r + 1) * n_out];
                let dxr = &mut dx[r * n_in..(r + 1) * n_in];
                for (o, &g) in gr.iter().enumerate() {
                    if g != 0.0 {
                        axpy(g, self.weight.row(o), dxr);
                    }
                }
            }
            dx
        })
    }
}

/// Unpadded strided 1-D convolution over a `[channels][length]` input.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// `[out, in, kernel]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
    pub stride: usize,
}

impl Conv1d {
    pub fn new(input: usize, output: usize, kernel: usize, stride: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / ((input * kernel) as f64).sqrt();
        Self {
            weight: uniform(&[output, input, kernel], bound, rng),
            bias: uniform(&[output], bound, rng),
            stride,
        }
    }

    pub fn zeros(input: usize, output: usize, kernel: usize, stride: usize) -> Self {
        Self { weight: Tensor::zeros(&[output, input, kernel]), bias: Tensor::zeros(&[output]), stride }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn output_len(&self, input_len: usize) -> usize {
        conv_output_len(input_len, self.kernel(), self.stride)
    }

    /// Unfolds the input into `[out_len][in · kernel]` patches.
    pub fn im2col(&self, x: &[f64], input_len: usize) -> Vec<f64> {
        let (c_in, k) = (self.in_channels(), self.kernel());
        let out_len = self.output_len(input_len);
        let width = c_in * k;
        let mut cols = vec![0.0; out_len * width];
        for t in 0..out_len {
            let row = &mut cols[t * width..(t + 1) * width];
            for c in 0..c_in {
                let src = &x[c * input_len + t * self.stride..c * input_len + t * self.stride + k];
                row[c * k..(c + 1) * k].copy_from_slice(src);
            }
        }
        cols
    }

    /// Output `[out][out_len]` from the patches of [`Conv1d::im2col`].
    pub fn forward_cols(&self, cols: &[f64]) -> Vec<f64> {
        let width = self.in_channels() * self.kernel();
        let out_len = cols.len() / width;
        let mut y = vec![0.0; self.out_channels() * out_len];
        for o in 0..self.out_channels() {
            let w = self.weight.row(o);
            let b = self.bias.data()[o];
            for t in 0..out_len {
                y[o * out_len + t] = b + dot(w, &cols[t * width..(t + 1) * width]);
            }
        }
        y
    }

    /// `gy` is `[out][out_len]`; returns `dL/dx` as `[in][input_len]` when asked.
    pub fn backward(
        &self,
        cols: &[f64],
        gy: &[f64],
        input_len: usize,
        grad: &mut Conv1d,
        need_input: bool,
    ) -> Option<Vec<f64>> {
        let (c_in, k) = (self.in_channels(), self.kernel());
        let width = c_in * k;
        let out_len = cols.len() / width;
        for o in 0..self.out_channels() {
            let g = &gy[o * out_len..(o + 1) * out_len];
            grad.bias.data_mut()[o] += g.iter().sum::<f64>();
            let gw = &mut grad.weight.data_mut()[o * width..(o + 1) * width];
            for (t, &gt) in g.iter().enumerate() {
                if gt != 0.0 {
                    axpy(gt, &cols[t * width..(t + 1) * width], gw);
                }
            }
        }
        need_input.then(|| {
            let mut dcols = vec![0.0; cols.len()];
            for o in 0..self.out_channels() {
                let w = self.weight.row(o);
                for t in 0..out_len {
                    let gt = gy[o * out_len + t];
                    if gt != 0.0 {
                        axpy(gt, w, &mut dcols[t * width..(t + 1) * width]);
                    }
                }
            }
            let mut dx = vec![0.0; c_in * input_len];
            for t in 0..out_len {
                for c in 0..c_in {
                    let base = c * input_len + t * self.stride;
                    for j in 0..k {
                        dx[base + j] += dcols[t * width + c * k + j];
                    }
                }
            }
            dx
        })
    }
}

/// `floor((len - kernel) / stride) + 1` for an unpadded convolution.
pub fn conv_output_len(len: usize, kernel: usize, stride: usize) -> usize {
    if len < kernel {
        0
    } else {
        (len - kernel) / stride + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn conv_matches_direct_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let conv = Conv1d::new(3, 4, 3, 2, &mut rng);
        let len = 11;
        let x: Vec<f64> = (0..3 * len).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = conv.forward_cols(&conv.im2col(&x, len));
        let out_len = conv.output_len(len);
        assert_eq!(out_len, 5);
        for o in 0..4 {
            for t in 0..out_len {
                let mut s = conv.bias.data()[o];
                for c in 0..3 {
                    for k in 0..3 {
                        s += conv.weight.data()[(o * 3 + c) * 3 + k] * x[c * len + t * 2 + k];
                    }
                }
                assert!((y[o * out_len + t] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn output_lengths() {
        assert_eq!(conv_output_len(100, 3, 1), 98);
        assert_eq!(conv_output_len(98, 3, 2), 48);
        assert_eq!(conv_output_len(48, 3, 1), 46);
        assert_eq!(conv_output_len(46, 3, 2), 22);
        assert_eq!(conv_output_len(2, 3, 1), 0);
    }
}
