//! Finite-difference gradient check shared by the integration targets.

#![allow(dead_code)]

use breathgest::breathnet::{BreathNet, ModelConfig, Tensor};
use breathgest::GestureKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-5;

/// 8 kernels, 2 heads, 20-sample windows: conv lengths 20, 18, 8, 6, 2.
pub fn reduced_config() -> ModelConfig {
    ModelConfig {
        window: 20,
        conv_channels: 8,
        heads: 2,
        linear1_out: 6,
        lstm_hidden: 5,
        linear2_out: 7,
        ..ModelConfig::default()
    }
}

pub fn batch(cfg: &ModelConfig, seed: u64) -> (Tensor, Vec<GestureKind>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = 4;
    let data = (0..rows * cfg.in_channels * cfg.window).map(|_| rng.random_range(-30.0..30.0)).collect();
    let labels = vec![GestureKind::Null, GestureKind::SingleClick, GestureKind::TripleClick, GestureKind::Sos];
    (Tensor::from_vec(&[rows, cfg.in_channels, cfg.window], data).unwrap(), labels)
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs().max(n.abs())).max(1e-7)
}

/// One checked parameter entry.
pub struct Check {
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub error: f64,
}

/// Compares `per_tensor` random entries of every parameter tensor with
/// central differences of the weighted loss.
pub fn gradient_checks(per_tensor: usize) -> Vec<Check> {
    let cfg = reduced_config();
    let model = BreathNet::new(cfg.clone(), 11).unwrap();
    let (x, y) = batch(&cfg, 5);
    let weights = [0.5, 2.0, 1.0, 1.0, 1.5];
    let (_, grads) = model.backward(&x, &y, &weights).unwrap();
    let names: Vec<String> = model.params.named().into_iter().map(|(n, _)| n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut out = Vec::new();
    for (t, g) in grads.tensors().iter().enumerate() {
        for _ in 0..per_tensor {
            let index = rng.random_range(0..g.len());
            let loss_at = |delta: f64| {
                let mut m = model.clone();
                m.params.tensors_mut()[t].data_mut()[index] += delta;
                m.backward(&x, &y, &weights).unwrap().0
            };
            let numeric = (loss_at(EPS) - loss_at(-EPS)) / (2.0 * EPS);
            let analytic = g.data()[index];
            out.push(Check { name: names[t].clone(), index, analytic, numeric, error: relative_error(analytic, numeric) });
        }
    }
    out
}
