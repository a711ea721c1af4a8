mod common;

use common::metric_oracle::{random_matrix, recompute};
use lexsent::eval::{confusion_matrix, metrics, row_normalize, ConfusionMatrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cm(cells: Vec<Vec<u64>>) -> ConfusionMatrix {
    ConfusionMatrix {
        labels: (0..cells.len()).map(|i| format!("c{i}")).collect(),
        cells,
    }
}

#[test]
fn hand_example() {
    let r = metrics(&cm(vec![vec![1, 1], vec![0, 2]])).unwrap();
    assert!((r.accuracy - 0.75).abs() < 1e-12);
    assert!((r.macro_f1 - 0.7333).abs() < 1e-4);
    // class 0: P 1, R 0.5; class 1: P 2/3, R 1
    assert!((r.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
}

#[test]
fn confusion_from_labels() {
    let m = confusion_matrix(&["A", "A", "B", "B"], &["A", "B", "B", "B"], &["A", "B"]).unwrap();
    assert_eq!(m.cells, vec![vec![1, 1], vec![0, 2]]);
    assert!(confusion_matrix(&["A"], &["C"], &["A", "B"]).is_err());
    assert!(confusion_matrix(&["A", "B"], &["A"], &["A", "B"]).is_err());
}

#[test]
fn perfect_and_empty() {
    let r = metrics(&cm(vec![vec![3, 0], vec![0, 4]])).unwrap();
    assert_eq!((r.accuracy, r.macro_f1, r.weighted_f1), (1.0, 1.0, 1.0));
    assert!(metrics(&cm(vec![vec![0, 0], vec![0, 0]])).is_err());
}

#[test]
fn row_normalization_flags_empty_rows() {
    let n = row_normalize(&cm(vec![vec![1, 3], vec![0, 0]]));
    assert_eq!(n.rows[0], vec![0.25, 0.75]);
    assert_eq!(n.empty_rows, vec![false, true]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn metrics_match_definitions(seed in any::<u64>()) {
        let m = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed));
        let r = metrics(&m).unwrap();
        let (acc, mf1, wf1) = recompute(&m.cells);
        prop_assert!((r.accuracy - acc).abs() < 1e-12);
        prop_assert!((r.macro_f1 - mf1).abs() < 1e-12);
        prop_assert!((r.weighted_f1 - wf1).abs() < 1e-12);
        for c in &r.per_class {
            prop_assert!((0.0..=1.0).contains(&c.f1));
        }
    }

    #[test]
    fn label_permutation_is_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng);
        let k = m.labels.len();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let permuted = ConfusionMatrix {
            labels: perm.iter().map(|&i| m.labels[i].clone()).collect(),
            cells: perm.iter().map(|&r| perm.iter().map(|&c| m.cells[r][c]).collect()).collect(),
        };
        let a = metrics(&m).unwrap();
        let b = metrics(&permuted).unwrap();
        prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
        prop_assert!((a.weighted_f1 - b.weighted_f1).abs() < 1e-12);
        for (i, &src) in perm.iter().enumerate() {
            prop_assert_eq!(&b.per_class[i].label, &a.per_class[src].label);
            prop_assert!((b.per_class[i].f1 - a.per_class[src].f1).abs() < 1e-12);
        }
    }
}
