//! Adam with bias correction.

use super::model::Params;
use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &Params) -> Self {
        let zeros: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        Self { m: zeros.clone(), v: zeros, step: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One update `θ ← θ − lr · m̂ / (√v̂ + ε)`.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, lr: f64) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((p, g), m), v) in params.tensors_mut().into_iter().zip(grads.tensors()).zip(&mut state.m).zip(&mut state.v) {
        for (((pi, &gi), mi), vi) in
            p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut().iter_mut()).zip(v.data_mut().iter_mut())
        {
            *mi = b1 * *mi + (1.0 - b1) * gi;
            *vi = b2 * *vi + (1.0 - b2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *pi -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::breathnet::ModelConfig;

    fn tiny() -> ModelConfig {
        ModelConfig {
            window: 12,
            conv_channels: 4,
            heads: 2,
            linear1_out: 3,
            lstm_hidden: 3,
            linear2_out: 3,
            strides: vec![1, 2],
            ..ModelConfig::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let cfg = tiny();
        let mut p = Params::init(&cfg, &mut crate::seed::rng(1));
        let before = p.clone();
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &Params::zeros(&cfg), &mut st, 5e-4);
        assert_eq!(p, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m = 0.1, v = 0.001, m̂ = v̂ = 1 → Δ = −lr / (1 + ε).
        let cfg = tiny();
        let mut p = Params::zeros(&cfg);
        let mut g = Params::zeros(&cfg);
        for t in g.tensors_mut() {
            t.fill(1.0);
        }
        let mut st = AdamState::new(&p);
        let lr = 5e-4;
        adam_step(&mut p, &g, &mut st, lr);
        let expected = -lr / (1.0 + 1e-8);
        for t in p.tensors() {
            assert!(t.data().iter().all(|&x| (x - expected).abs() < 1e-18));
        }
        // A constant gradient keeps m̂ = v̂ = 1, so every step has the same size.
        adam_step(&mut p, &g, &mut st, lr);
        for t in p.tensors() {
            assert!(t.data().iter().all(|&x| (x - 2.0 * expected).abs() < 1e-15));
        }
    }

    #[test]
    fn deterministic() {
        let cfg = tiny();
        let mut g = Params::init(&cfg, &mut crate::seed::rng(3));
        g.scale(0.1);
        let run = || {
            let mut p = Params::init(&cfg, &mut crate::seed::rng(2));
            let mut st = AdamState::new(&p);
            adam_step(&mut p, &g, &mut st, 1e-3);
            adam_step(&mut p, &g, &mut st, 1e-3);
            p
        };
        assert_eq!(run(), run());
    }
}
