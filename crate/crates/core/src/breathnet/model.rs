use rand::Rng;
use serde::{Deserialize, Serialize};

use super::attention::{AttentionCache, SelfAttention};
use super::layers::{conv_output_len, relu_backward, relu_in_place, Conv1d, Linear};
use super::loss::weighted_nll;
use super::lstm::{Lstm, LstmCache};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::signal::GestureKind;

/// Layer sizes. The defaults reproduce the published network: four
/// 100-kernel convolutions (kernel 3, strides 1,2,1,2), 20-head attention
/// over 100 features, Linear 100→100, LSTM 100→100, Linear 2200→100 and
/// Linear 100→5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Samples per input window.
    pub window: usize,
    pub in_channels: usize,
    /// Kernels per convolution; also the attention embedding width.
    pub conv_channels: usize,
    pub kernel_size: usize,
    pub strides: Vec<usize>,
    pub heads: usize,
    pub linear1_out: usize,
    pub lstm_hidden: usize,
    pub linear2_out: usize,
    /// Each input channel is centered per window and divided by this scale.
    pub input_scale: Vec<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            window: 100,
            in_channels: 2,
            conv_channels: 100,
            kernel_size: 3,
            strides: vec![1, 2, 1, 2],
            heads: 20,
            linear1_out: 100,
            lstm_hidden: 100,
            linear2_out: 100,
            input_scale: vec![10.0, 2.0],
        }
    }
}

impl ModelConfig {
    /// Time length after the input and after each convolution.
    pub fn conv_lengths(&self) -> Vec<usize> {
        let mut lens = vec![self.window];
        for &s in &self.strides {
            let prev = *lens.last().unwrap();
            lens.push(conv_output_len(prev, self.kernel_size, s.max(1)));
        }
        lens
    }

    /// Number of time steps seen by attention and the LSTM.
    pub fn seq_len(&self) -> usize {
        *self.conv_lengths().last().unwrap()
    }

    /// Width of the flattened LSTM output feeding Linear2.
    pub fn flatten_width(&self) -> usize {
        self.seq_len() * self.lstm_hidden
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.in_channels == 0 || self.conv_channels == 0 || self.kernel_size == 0 || self.heads == 0 {
            return bad("layer sizes must be positive".into());
        }
        if self.strides.is_empty() || self.strides.contains(&0) {
            return bad("need at least one convolution with positive stride".into());
        }
        if self.conv_channels % self.heads != 0 {
            return bad(format!("{} heads do not divide embedding {}", self.heads, self.conv_channels));
        }
        if self.conv_lengths().iter().skip(1).any(|&l| l == 0) {
            return bad(format!("window {} too short for the convolution stack", self.window));
        }
        if self.linear1_out == 0 || self.lstm_hidden == 0 || self.linear2_out == 0 {
            return bad("dense sizes must be positive".into());
        }
        if self.input_scale.len() != self.in_channels || self.input_scale.iter().any(|s| !(*s > 0.0)) {
            return bad("input_scale needs one positive entry per channel".into());
        }
        Ok(())
    }
}

/// All trainable tensors of the network. A zeroed instance doubles as the
/// gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub convs: Vec<Conv1d>,
    pub attention: SelfAttention,
    pub linear1: Linear,
    pub lstm: Lstm,
    pub linear2: Linear,
    pub linear3: Linear,
}

impl Params {
    pub fn init(cfg: &ModelConfig, rng: &mut impl Rng) -> Self {
        let mut convs = Vec::with_capacity(cfg.strides.len());
        for (i, &s) in cfg.strides.iter().enumerate() {
            let c_in = if i == 0 { cfg.in_channels } else { cfg.conv_channels };
            convs.push(Conv1d::new(c_in, cfg.conv_channels, cfg.kernel_size, s, rng));
        }
        Self {
            convs,
            attention: SelfAttention::new(cfg.conv_channels, cfg.heads, rng),
            linear1: Linear::new(cfg.conv_channels, cfg.linear1_out, rng),
            lstm: Lstm::new(cfg.linear1_out, cfg.lstm_hidden, rng),
            linear2: Linear::new(cfg.flatten_width(), cfg.linear2_out, rng),
            linear3: Linear::new(cfg.linear2_out, GestureKind::COUNT, rng),
        }
    }

    pub fn zeros(cfg: &ModelConfig) -> Self {
        let convs = cfg
            .strides
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let c_in = if i == 0 { cfg.in_channels } else { cfg.conv_channels };
                Conv1d::zeros(c_in, cfg.conv_channels, cfg.kernel_size, s)
            })
            .collect();
        Self {
            convs,
            attention: SelfAttention::zeros(cfg.conv_channels, cfg.heads),
            linear1: Linear::zeros(cfg.conv_channels, cfg.linear1_out),
            lstm: Lstm::zeros(cfg.linear1_out, cfg.lstm_hidden),
            linear2: Linear::zeros(cfg.flatten_width(), cfg.linear2_out),
            linear3: Linear::zeros(cfg.linear2_out, GestureKind::COUNT),
        }
    }

    /// Parameter tensors in a fixed order with stable names.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, c) in self.convs.iter().enumerate() {
            out.push((format!("conv{}.weight", i + 1), &c.weight));
            out.push((format!("conv{}.bias", i + 1), &c.bias));
        }
        let a = &self.attention;
        for (name, lin) in [("query", &a.query), ("key", &a.key), ("value", &a.value), ("output", &a.output)] {
            out.push((format!("attention.{name}.weight"), &lin.weight));
            out.push((format!("attention.{name}.bias"), &lin.bias));
        }
        out.push(("linear1.weight".into(), &self.linear1.weight));
        out.push(("linear1.bias".into(), &self.linear1.bias));
        out.push(("lstm.w_ih".into(), &self.lstm.w_ih));
        out.push(("lstm.w_hh".into(), &self.lstm.w_hh));
        out.push(("lstm.bias".into(), &self.lstm.bias));
        out.push(("linear2.weight".into(), &self.linear2.weight));
        out.push(("linear2.bias".into(), &self.linear2.bias));
        out.push(("linear3.weight".into(), &self.linear3.weight));
        out.push(("linear3.bias".into(), &self.linear3.bias));
        out
    }

    /// Same order as [`Params::named`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for c in &mut self.convs {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        let a = &mut self.attention;
        for lin in [&mut a.query, &mut a.key, &mut a.value, &mut a.output] {
            out.push(&mut lin.weight);
            out.push(&mut lin.bias);
        }
        out.push(&mut self.linear1.weight);
        out.push(&mut self.linear1.bias);
        out.push(&mut self.lstm.w_ih);
        out.push(&mut self.lstm.w_hh);
        out.push(&mut self.lstm.bias);
        out.push(&mut self.linear2.weight);
        out.push(&mut self.linear2.bias);
        out.push(&mut self.linear3.weight);
        out.push(&mut self.linear3.bias);
        out
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            for v in t.data_mut() {
                *v *= factor;
            }
        }
    }

    pub fn add_assign(&mut self, other: &Params) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
    }
}

/// Training bookkeeping stored with the weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: Option<f64>,
}

/// The classifier: convolutions → self-attention → Linear1 → LSTM →
/// flatten → Linear2 → Linear3.
#[derive(Debug, Clone, PartialEq)]
pub struct BreathNet {
    pub config: ModelConfig,
    pub params: Params,
    pub meta: TrainingMeta,
}

/// Intermediate values of one forward pass kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub(crate) struct ForwardCache {
    cols: Vec<Vec<f64>>,
    conv_out: Vec<Vec<f64>>,
    attn_in: Vec<f64>,
    attn: AttentionCache,
    attn_out: Vec<f64>,
    lin1_out: Vec<f64>,
    lstm: LstmCache,
    flat: Vec<f64>,
    lin2_out: Vec<f64>,
}

impl BreathNet {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = crate::seed::rng(seed);
        let params = Params::init(&config, &mut rng);
        Ok(Self { config, params, meta: TrainingMeta::default() })
    }

    pub fn window(&self) -> usize {
        self.config.window
    }

    fn input_len(&self) -> usize {
        self.config.in_channels * self.config.window
    }

    /// Centers each channel of a raw window and divides it by its scale.
    pub fn prepare_input(&self, raw: &[f64]) -> Vec<f64> {
        let l = self.config.window;
        let mut x = raw.to_vec();
        for (c, chunk) in x.chunks_exact_mut(l).enumerate() {
            let mean = chunk.iter().sum::<f64>() / l as f64;
            let scale = self.config.input_scale[c];
            for v in chunk {
                *v = (*v - mean) / scale;
            }
        }
        x
    }

    /// Logits for one prepared input; fills `cache` when given.
    pub(crate) fn forward_prepared(&self, x: &[f64], mut cache: Option<&mut ForwardCache>) -> [f64; 5] {
        let lens = self.config.conv_lengths();
        let mut h = x.to_vec();
        let mut cols_all = Vec::new();
        let mut outs = Vec::new();
        for (i, conv) in self.params.convs.iter().enumerate() {
            let cols = conv.im2col(&h, lens[i]);
            let mut y = conv.forward_cols(&cols);
            relu_in_place(&mut y);
            if cache.is_some() {
                cols_all.push(cols);
                outs.push(y.clone());
            }
            h = y;
        }
        // [channels][steps] → [steps][channels]
        let (e, steps) = (self.config.conv_channels, self.config.seq_len());
        let mut attn_in = vec![0.0; steps * e];
        for c in 0..e {
            for t in 0..steps {
                attn_in[t * e + c] = h[c * steps + t];
            }
        }
        let mut attn_cache = AttentionCache::default();
        let attn_out = self.params.attention.forward(&attn_in, &mut attn_cache);
        let mut lin1_out = self.params.linear1.forward(&attn_out);
        relu_in_place(&mut lin1_out);
        let mut lstm_cache = LstmCache::default();
        let flat = self.params.lstm.forward(&lin1_out, &mut lstm_cache);
        let mut lin2_out = self.params.linear2.forward(&flat);
        relu_in_place(&mut lin2_out);
        let logits = self.params.linear3.forward(&lin2_out);
        if let Some(c) = cache.as_deref_mut() {
            *c = ForwardCache {
                cols: cols_all,
                conv_out: outs,
                attn_in,
                attn: attn_cache,
                attn_out,
                lin1_out,
                lstm: lstm_cache,
                flat,
                lin2_out,
            };
        }
        logits.try_into().expect("five logits")
    }

    /// Accumulates parameter gradients for one sample given `dL/dlogits`.
    pub(crate) fn backward_prepared(&self, cache: &ForwardCache, dlogits: &[f64], grad: &mut Params) {
        let p = &self.params;
        let mut g = p.linear3.backward(&cache.lin2_out, dlogits, &mut grad.linear3, true).unwrap();
        relu_backward(&mut g, &cache.lin2_out);
        let g = p.linear2.backward(&cache.flat, &g, &mut grad.linear2, true).unwrap();
        let mut g = p.lstm.backward(&cache.lin1_out, &cache.lstm, &g, &mut grad.lstm);
        relu_backward(&mut g, &cache.lin1_out);
        let g = p.linear1.backward(&cache.attn_out, &g, &mut grad.linear1, true).unwrap();
        let g = p.attention.backward(&cache.attn_in, &cache.attn, &g, &mut grad.attention);
        let (e, steps) = (self.config.conv_channels, self.config.seq_len());
        let mut g_conv = vec![0.0; e * steps];
        for t in 0..steps {
            for c in 0..e {
                g_conv[c * steps + t] = g[t * e + c];
            }
        }
        let lens = self.config.conv_lengths();
        for i in (0..p.convs.len()).rev() {
            relu_backward(&mut g_conv, &cache.conv_out[i]);
            match p.convs[i].backward(&cache.cols[i], &g_conv, lens[i], &mut grad.convs[i], i > 0) {
                Some(dx) => g_conv = dx,
                None => break,
            }
        }
    }

    /// Logits for one raw window (channel-major, `in_channels × window`).
    pub fn logits(&self, raw: &[f64]) -> Result<[f64; 5]> {
        if raw.len() != self.input_len() {
            return Err(Error::ShapeMismatch(format!("window has {} values, model expects {}", raw.len(), self.input_len())));
        }
        Ok(self.forward_prepared(&self.prepare_input(raw), None))
    }

    fn check_batch(&self, batch: &Tensor) -> Result<usize> {
        let s = batch.shape();
        if s.len() != 3 || s[1] != self.config.in_channels || s[2] != self.config.window {
            return Err(Error::ShapeMismatch(format!(
                "batch {s:?}, expected [B, {}, {}]",
                self.config.in_channels, self.config.window
            )));
        }
        Ok(s[0])
    }

    /// Logits `B×5` for a raw batch `B×channels×window`.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        let rows = self.check_batch(batch)?;
        let mut out = Vec::with_capacity(rows * 5);
        for i in 0..rows {
            out.extend(self.forward_prepared(&self.prepare_input(batch.row(i)), None));
        }
        Tensor::from_vec(&[rows, 5], out)
    }

    /// Weighted cross-entropy of a batch and its gradient for every
    /// parameter.
    pub fn backward(&self, batch: &Tensor, labels: &[GestureKind], class_weights: &[f64; 5]) -> Result<(f64, Params)> {
        let rows = self.check_batch(batch)?;
        if labels.len() != rows {
            return Err(Error::ShapeMismatch(format!("{rows} inputs but {} labels", labels.len())));
        }
        let inputs: Vec<&[f64]> = (0..rows).map(|i| batch.row(i)).collect();
        let mut grad = Params::zeros(&self.config);
        let loss = self.accumulate(&inputs, labels, class_weights, &mut grad);
        Ok((loss, grad))
    }

    /// Adds the batch gradient into `grad` and returns the batch loss.
    pub(crate) fn accumulate(&self, inputs: &[&[f64]], labels: &[GestureKind], w: &[f64; 5], grad: &mut Params) -> f64 {
        let total: f64 = labels.iter().map(|l| w[l.index()]).sum();
        if total <= 0.0 {
            return 0.0;
        }
        let mut loss = 0.0;
        let mut cache = ForwardCache::default();
        for (raw, &label) in inputs.iter().zip(labels) {
            let weight = w[label.index()];
            if weight == 0.0 {
                continue;
            }
            let logits = self.forward_prepared(&self.prepare_input(raw), Some(&mut cache));
            let (l, mut dz) = weighted_nll(&logits, label, weight);
            loss += l;
            for d in &mut dz {
                *d /= total;
            }
            self.backward_prepared(&cache, &dz, grad);
        }
        loss / total
    }

    /// Weighted loss without gradients.
    pub fn loss(&self, inputs: &[&[f64]], labels: &[GestureKind], w: &[f64; 5]) -> f64 {
        let total: f64 = labels.iter().map(|l| w[l.index()]).sum();
        if total <= 0.0 {
            return 0.0;
        }
        inputs
            .iter()
            .zip(labels)
            .filter(|(_, l)| w[l.index()] != 0.0)
            .map(|(raw, &l)| weighted_nll(&self.forward_prepared(&self.prepare_input(raw), None), l, w[l.index()]).0)
            .sum::<f64>()
            / total
    }
}

/// Index of the largest logit; the first one wins ties.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = i;
        }
    }
    best
}
