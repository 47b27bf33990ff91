//! Analytic gradients against central finite differences on a reduced
//! network.

mod common;

use breathgest::breathnet::BreathNet;

#[test]
fn every_layer_matches_finite_differences() {
    assert_eq!(common::reduced_config().conv_lengths(), vec![20, 18, 8, 6, 2]);
    let checks = common::gradient_checks(3);
    assert!(checks.len() >= 50);
    for c in &checks {
        assert!(
            c.error < 1e-4,
            "{}[{}]: analytic {:e}, numeric {:e}, rel {:e}",
            c.name,
            c.index,
            c.analytic,
            c.numeric,
            c.error
        );
    }
    for prefix in ["conv", "attention", "lstm", "linear"] {
        assert!(checks.iter().any(|c| c.name.starts_with(prefix)), "{prefix} not covered");
    }
}

#[test]
fn zero_weight_batch_has_zero_gradient() {
    let cfg = common::reduced_config();
    let model = BreathNet::new(cfg.clone(), 2).unwrap();
    let (x, y) = common::batch(&cfg, 9);
    let (loss, grads) = model.backward(&x, &y, &[0.0; 5]).unwrap();
    assert_eq!(loss, 0.0);
    assert!(grads.tensors().iter().all(|t| t.data().iter().all(|&v| v == 0.0)));
}
