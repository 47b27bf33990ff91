//! Multi-head scaled dot-product self-attention over time steps.
//!
//! Input and output are time-major `[steps][embed]`. Each head sees a
//! contiguous slice of `embed / heads` features. There is no residual
//! connection or normalization.

use rand::Rng;

use super::layers::{uniform, Linear};
use super::tensor::{axpy, dot, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub heads: usize,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct AttentionCache {
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `[heads][steps][steps]` softmax weights.
    probs: Vec<f64>,
    context: Vec<f64>,
}

fn xavier(embed: usize, rng: &mut impl Rng) -> Linear {
    let bound = (6.0 / (2 * embed) as f64).sqrt();
    Linear { weight: uniform(&[embed, embed], bound, rng), bias: Tensor::zeros(&[embed]) }
}

impl SelfAttention {
    pub fn new(embed: usize, heads: usize, rng: &mut impl Rng) -> Self {
        Self { query: xavier(embed, rng), key: xavier(embed, rng), value: xavier(embed, rng), output: xavier(embed, rng), heads }
    }

    pub fn zeros(embed: usize, heads: usize) -> Self {
        Self {
            query: Linear::zeros(embed, embed),
            key: Linear::zeros(embed, embed),
            value: Linear::zeros(embed, embed),
            output: Linear::zeros(embed, embed),
            heads,
        }
    }

    pub fn embed(&self) -> usize {
        self.query.input_dim()
    }

    fn head_dim(&self) -> usize {
        self.embed() / self.heads
    }

    pub(crate) fn forward(&self, x: &[f64], cache: &mut AttentionCache) -> Vec<f64> {
        let e = self.embed();
        let d = self.head_dim();
        let steps = x.len() / e;
        let scale = 1.0 / (d as f64).sqrt();
        let q = self.query.forward(x);
        let k = self.key.forward(x);
        let v = self.value.forward(x);
        let mut probs = vec![0.0; self.heads * steps * steps];
        let mut context = vec![0.0; steps * e];
        for h in 0..self.heads {
            let hs = h * d..(h + 1) * d;
            for i in 0..steps {
                let qi = &q[i * e..][hs.clone()];
                let row = &mut probs[(h * steps + i) * steps..(h * steps + i + 1) * steps];
                let mut max = f64::NEG_INFINITY;
                for (j, p) in row.iter_mut().enumerate() {
                    *p = scale * dot(qi, &k[j * e..][hs.clone()]);
                    max = max.max(*p);
                }
                let mut sum = 0.0;
                for p in row.iter_mut() {
                    *p = (*p - max).exp();
                    sum += *p;
                }
                for p in row.iter_mut() {
                    *p /= sum;
                }
                let ci = &mut context[i * e..][hs.clone()];
                for (j, &p) in row.iter().enumerate() {
                    axpy(p, &v[j * e..][hs.clone()], ci);
                }
            }
        }
        let out = self.output.forward(&context);
        *cache = AttentionCache { q, k, v, probs, context };
        out
    }

    pub(crate) fn backward(
        &self,
        x: &[f64],
        cache: &AttentionCache,
        gy: &[f64],
        grad: &mut SelfAttention,
    ) -> Vec<f64> {
        let e = self.embed();
        let d = self.head_dim();
        let steps = x.len() / e;
        let scale = 1.0 / (d as f64).sqrt();
        let dctx = self.output.backward(&cache.context, gy, &mut grad.output, true).expect("input grad");
        let mut dq = vec![0.0; steps * e];
        let mut dk = vec![0.0; steps * e];
        let mut dv = vec![0.0; steps * e];
        let mut dp = vec![0.0; steps];
        for h in 0..self.heads {
            let hs = h * d..(h + 1) * d;
            for i in 0..steps {
                let p = &cache.probs[(h * steps + i) * steps..(h * steps + i + 1) * steps];
                let dci = &dctx[i * e..][hs.clone()];
                for j in 0..steps {
                    dp[j] = dot(dci, &cache.v[j * e..][hs.clone()]);
                    axpy(p[j], dci, &mut dv[j * e..][hs.clone()]);
                }
                let inner = dot(p, &dp);
                for j in 0..steps {
                    let ds = p[j] * (dp[j] - inner) * scale;
                    if ds != 0.0 {
                        axpy(ds, &cache.k[j * e..][hs.clone()], &mut dq[i * e..][hs.clone()]);
                        axpy(ds, &cache.q[i * e..][hs.clone()], &mut dk[j * e..][hs.clone()]);
                    }
                }
            }
        }
        let mut dx = self.query.backward(x, &dq, &mut grad.query, true).expect("input grad");
        let dxk = self.key.backward(x, &dk, &mut grad.key, true).expect("input grad");
        let dxv = self.value.backward(x, &dv, &mut grad.value, true).expect("input grad");
        axpy(1.0, &dxk, &mut dx);
        axpy(1.0, &dxv, &mut dx);
        dx
    }
}
