//! Class-weighted softmax cross-entropy.

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::signal::GestureKind;

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// Loss of one sample and its gradient w.r.t. the logits, both already
/// multiplied by the sample's class weight (normalization happens per batch).
pub(crate) fn weighted_nll(logits: &[f64], label: GestureKind, weight: f64) -> (f64, Vec<f64>) {
    let p = softmax(logits);
    let nll = -log_softmax(logits)[label.index()];
    let mut grad: Vec<f64> = p.iter().map(|pi| weight * pi).collect();
    grad[label.index()] -= weight;
    (weight * nll, grad)
}

fn check(logits: &Tensor, labels: &[GestureKind]) -> Result<usize> {
    let shape = logits.shape();
    if shape.len() != 2 || shape[1] != GestureKind::COUNT || shape[0] != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "logits {shape:?} vs {} labels over {} classes",
            labels.len(),
            GestureKind::COUNT
        )));
    }
    Ok(shape[0])
}

/// `Σ w_{y_i} · (−log softmax(z_i)[y_i]) / Σ w_{y_i}`; zero when every sample
/// has zero weight.
pub fn weighted_cross_entropy(logits: &Tensor, labels: &[GestureKind], class_weights: &[f64; 5]) -> Result<f64> {
    Ok(weighted_cross_entropy_grad(logits, labels, class_weights)?.0)
}

/// Loss and `dL/dlogits` for a batch.
pub fn weighted_cross_entropy_grad(
    logits: &Tensor,
    labels: &[GestureKind],
    class_weights: &[f64; 5],
) -> Result<(f64, Tensor)> {
    let rows = check(logits, labels)?;
    let total: f64 = labels.iter().map(|l| class_weights[l.index()]).sum();
    let mut grad = Tensor::zeros(&[rows, GestureKind::COUNT]);
    if total <= 0.0 {
        return Ok((0.0, grad));
    }
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let (l, g) = weighted_nll(logits.row(i), label, class_weights[label.index()]);
        loss += l;
        for (dst, gi) in grad.data_mut()[i * 5..(i + 1) * 5].iter_mut().zip(g) {
            *dst = gi / total;
        }
    }
    Ok((loss / total, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use GestureKind::*;

    #[test]
    fn softmax_rows_sum_to_one() {
        for z in [[0.0, 1.0, -2.0, 3.0, 1e3], [-1e3, 0.0, 0.0, 0.0, 0.5]] {
            let p = softmax(&z);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_logits_give_ln5() {
        let logits = Tensor::zeros(&[3, 5]);
        let l = weighted_cross_entropy(&logits, &[Null, Sos, TripleClick], &[1.0; 5]).unwrap();
        assert!((l - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_logits_give_zero_loss() {
        let mut data = vec![0.0; 5];
        data[2] = 800.0;
        let logits = Tensor::from_vec(&[1, 5], data).unwrap();
        let l = weighted_cross_entropy(&logits, &[SingleClick], &[1.0; 5]).unwrap();
        assert!(l >= 0.0 && l < 1e-300);
    }

    #[test]
    fn hand_batch_of_three() {
        // Frozen from an independent float script:
        //   rows = [[1,0,0,0,0],[0.5,-0.5,2,0,1],[0,0,0,3,-1]], labels = [0,2,4],
        //   weights = [2,1,1,1,1]
        //   nll_i = logsumexp(row) - row[label]; loss = Σ w·nll / Σ w
        let logits = Tensor::from_vec(
            &[3, 5],
            vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.5, -0.5, 2.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0, -1.0],
        )
        .unwrap();
        let l = weighted_cross_entropy(&logits, &[Null, SingleClick, TripleClick], &[2.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((l - HAND_BATCH_LOSS).abs() < 1e-12, "{l}");
    }

    const HAND_BATCH_LOSS: f64 = 1.639285013880738;

    #[test]
    fn zero_weights_give_zero_gradient() {
        let logits = Tensor::from_vec(&[2, 5], (0..10).map(f64::from).collect()).unwrap();
        let (l, g) = weighted_cross_entropy_grad(&logits, &[Null, Null], &[0.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn logit_gradient_rows_sum_to_zero() {
        let logits = Tensor::from_vec(&[2, 5], vec![0.3, -1.0, 2.0, 0.0, 0.7, 1.0, 1.0, -3.0, 0.2, 0.0]).unwrap();
        let (_, g) = weighted_cross_entropy_grad(&logits, &[Sos, DoubleClick], &[1.0; 5]).unwrap();
        for i in 0..2 {
            assert!(g.row(i).iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors() {
        let logits = Tensor::zeros(&[2, 4]);
        assert!(weighted_cross_entropy(&logits, &[Null, Null], &[1.0; 5]).is_err());
        let logits = Tensor::zeros(&[2, 5]);
        assert!(weighted_cross_entropy(&logits, &[Null], &[1.0; 5]).is_err());
    }
}
