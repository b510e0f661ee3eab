mod support;

use support::{check_model, layer_gradient_reports};

const TRIALS: usize = 20;

#[test]
fn every_layer_matches_finite_differences() {
    for r in layer_gradient_reports(TRIALS, 11) {
        assert_eq!(r.trials, TRIALS);
        assert!(r.max_rel_err < 1e-4, "{}: {:e}", r.layer, r.max_rel_err);
    }
}

#[test]
fn tiny_model_matches_finite_differences() {
    let r = check_model(TRIALS, 5);
    assert!(r.max_rel_err < 1e-3, "{:e}", r.max_rel_err);
}
