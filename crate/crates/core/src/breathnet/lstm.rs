//! Single-layer unidirectional LSTM returning every hidden state.
//!
//! Gate order in the stacked weights is input, forget, cell, output.

use rand::Rng;

use super::layers::uniform;
use super::tensor::{axpy, dot, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// `[4·hidden, input]`
    pub w_ih: Tensor,
    /// `[4·hidden, hidden]`
    pub w_hh: Tensor,
    /// `[4·hidden]`
    pub bias: Tensor,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LstmCache {
    /// Activated gates per step, `[steps][4·hidden]`.
    gates: Vec<f64>,
    /// Cell states `c_0..c_T`, `[steps + 1][hidden]`.
    cells: Vec<f64>,
    /// Hidden states `h_0..h_T`, `[steps + 1][hidden]`.
    hidden: Vec<f64>,
    tanh_cells: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Lstm {
    pub fn new(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut bias = uniform(&[4 * hidden], bound, rng);
        // Start with the forget gate open.
        for b in &mut bias.data_mut()[hidden..2 * hidden] {
            *b += 1.0;
        }
        Self { w_ih: uniform(&[4 * hidden, input], bound, rng), w_hh: uniform(&[4 * hidden, hidden], bound, rng), bias }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_ih: Tensor::zeros(&[4 * hidden, input]),
            w_hh: Tensor::zeros(&[4 * hidden, hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.shape()[1]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hh.shape()[1]
    }

    /// Returns hidden states `h_1..h_T` as `[steps][hidden]`.
    pub(crate) fn forward(&self, x: &[f64], cache: &mut LstmCache) -> Vec<f64> {
        let (n_in, n_h) = (self.input_dim(), self.hidden_dim());
        let steps = x.len() / n_in;
        let mut gates = vec![0.0; steps * 4 * n_h];
        let mut cells = vec![0.0; (steps + 1) * n_h];
        let mut hidden = vec![0.0; (steps + 1) * n_h];
        let mut tanh_cells = vec![0.0; steps * n_h];
        for t in 0..steps {
            let xt = &x[t * n_in..(t + 1) * n_in];
            let g = &mut gates[t * 4 * n_h..(t + 1) * 4 * n_h];
            {
                let h_prev = &hidden[t * n_h..(t + 1) * n_h];
                for (r, gr) in g.iter_mut().enumerate() {
                    *gr = self.bias.data()[r] + dot(self.w_ih.row(r), xt) + dot(self.w_hh.row(r), h_prev);
                }
            }
            for j in 0..n_h {
                let i_g = sigmoid(g[j]);
                let f_g = sigmoid(g[n_h + j]);
                let c_g = g[2 * n_h + j].tanh();
                let o_g = sigmoid(g[3 * n_h + j]);
                g[j] = i_g;
                g[n_h + j] = f_g;
                g[2 * n_h + j] = c_g;
                g[3 * n_h + j] = o_g;
                let c = f_g * cells[t * n_h + j] + i_g * c_g;
                cells[(t + 1) * n_h + j] = c;
                let tc = c.tanh();
                tanh_cells[t * n_h + j] = tc;
                hidden[(t + 1) * n_h + j] = o_g * tc;
            }
        }
        let out = hidden[n_h..].to_vec();
        *cache = LstmCache { gates, cells, hidden, tanh_cells };
        out
    }

    /// `gy` is `dL/dh_t` for every step; returns `dL/dx`.
    pub(crate) fn backward(&self, x: &[f64], cache: &LstmCache, gy: &[f64], grad: &mut Lstm) -> Vec<f64> {
        let (n_in, n_h) = (self.input_dim(), self.hidden_dim());
        let steps = x.len() / n_in;
        let mut dx = vec![0.0; x.len()];
        let mut dh_next = vec![0.0; n_h];
        let mut dc_next = vec![0.0; n_h];
        let mut dz = vec![0.0; 4 * n_h];
        for t in (0..steps).rev() {
            let g = &cache.gates[t * 4 * n_h..(t + 1) * 4 * n_h];
            let c_prev = &cache.cells[t * n_h..(t + 1) * n_h];
            let h_prev = &cache.hidden[t * n_h..(t + 1) * n_h];
            for j in 0..n_h {
                let (i_g, f_g, c_g, o_g) = (g[j], g[n_h + j], g[2 * n_h + j], g[3 * n_h + j]);
                let tc = cache.tanh_cells[t * n_h + j];
                let dh = gy[t * n_h + j] + dh_next[j];
                let dc = dh * o_g * (1.0 - tc * tc) + dc_next[j];
                dz[j] = dc * c_g * i_g * (1.0 - i_g);
                dz[n_h + j] = dc * c_prev[j] * f_g * (1.0 - f_g);
                dz[2 * n_h + j] = dc * i_g * (1.0 - c_g * c_g);
                dz[3 * n_h + j] = dh * tc * o_g * (1.0 - o_g);
                dc_next[j] = dc * f_g;
            }
            let xt = &x[t * n_in..(t + 1) * n_in];
            dh_next.fill(0.0);
            let dxt = &mut dx[t * n_in..(t + 1) * n_in];
            for (r, &dzr) in dz.iter().enumerate() {
                if dzr == 0.0 {
                    continue;
                }
                axpy(dzr, xt, &mut grad.w_ih.data_mut()[r * n_in..(r + 1) * n_in]);
                axpy(dzr, h_prev, &mut grad.w_hh.data_mut()[r * n_h..(r + 1) * n_h]);
                grad.bias.data_mut()[r] += dzr;
                axpy(dzr, self.w_ih.row(r), dxt);
                axpy(dzr, self.w_hh.row(r), &mut dh_next);
            }
        }
        dx
    }
}
