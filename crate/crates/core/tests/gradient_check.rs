mod common;

use common::gradcheck::instance;
use lexsent::models::{gradient_check, ModelKind};

const TOLERANCE: f64 = 1e-4;

fn check(kind: ModelKind) {
    for seed in 0..6 {
        let inst = instance(kind, seed);
        let report = gradient_check(&inst.params, &inst.batch, &inst.golds, 1e-5).unwrap();
        let trainable = inst.params.tensors.iter().filter(|t| t.trainable).count();
        assert_eq!(report.len(), trainable);
        for t in &report {
            assert!(
                t.checked > 0,
                "{kind} seed {seed}: {} checked nothing",
                t.name
            );
            assert!(
                t.max_rel_error < TOLERANCE,
                "{kind} seed {seed}: {} relative error {}",
                t.name,
                t.max_rel_error
            );
        }
    }
}

#[test]
fn logreg_gradients_match_finite_differences() {
    check(ModelKind::Logreg);
}

#[test]
fn textcnn_gradients_match_finite_differences() {
    check(ModelKind::Textcnn);
}
