mod common;

use common::{brute_macro_f1, brute_ovr_auc, level, random_instance, rng};
use cyberaggr_core::metrics::{accuracy, macro_f1, ovr_auc, ConfusionMatrix};
use cyberaggr_core::Level;
use proptest::prelude::*;

#[test]
fn macro_f1_and_auc_match_brute_force() {
    let mut r = rng(7);
    for _ in 0..200 {
        let (y, pred, proba) = random_instance(&mut r);
        let f1 = macro_f1(&y, &pred).unwrap();
        assert!((f1 - brute_macro_f1(&y, &pred)).abs() < 1e-9);
        let auc = ovr_auc(&y, &proba).unwrap();
        let (macro_auc, per) = brute_ovr_auc(&y, &proba);
        assert!((auc.macro_auc - macro_auc).abs() < 1e-9);
        for c in 0..3 {
            match (auc.per_class[c], per[c]) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
                (None, None) => {}
                other => panic!("class {c}: {other:?}"),
            }
        }
    }
}

#[test]
fn hand_confusion_matrix() {
    // Rows true, columns predicted: [[2,1,0],[0,2,0],[1,0,2]].
    let cells = [[2, 1, 0], [0, 2, 0], [1, 0, 2]];
    let (mut y, mut p) = (Vec::new(), Vec::new());
    for (t, row) in cells.iter().enumerate() {
        for (q, &n) in row.iter().enumerate() {
            for _ in 0..n {
                y.push(level(t));
                p.push(level(q));
            }
        }
    }
    let expected = (2.0 / 3.0 + 0.8 + 0.8) / 3.0;
    assert!((macro_f1(&y, &p).unwrap() - expected).abs() < 1e-12);
    assert_eq!(ConfusionMatrix::new(&y, &p).unwrap().total(), y.len());
}

fn labels(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..3, n)
}

proptest! {
    #[test]
    fn relabeling_classes_preserves_acc_and_f1(
        (y, p) in (2usize..60).prop_flat_map(|n| (labels(n), labels(n))),
        perm in Just([0usize, 1, 2]).prop_shuffle(),
    ) {
        let yt: Vec<Level> = y.iter().map(|&i| level(i)).collect();
        let yp: Vec<Level> = p.iter().map(|&i| level(i)).collect();
        let yt2: Vec<Level> = y.iter().map(|&i| level(perm[i])).collect();
        let yp2: Vec<Level> = p.iter().map(|&i| level(perm[i])).collect();
        prop_assert!((accuracy(&yt, &yp).unwrap() - accuracy(&yt2, &yp2).unwrap()).abs() < 1e-12);
        prop_assert!((macro_f1(&yt, &yp).unwrap() - macro_f1(&yt2, &yp2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn auc_is_invariant_under_monotone_transforms(
        (y, scores) in (2usize..60).prop_flat_map(|n| (labels(n), prop::collection::vec(0u8..20, n * 3))),
        a in 0.1f64..5.0,
        b in -3.0f64..3.0,
    ) {
        let yt: Vec<Level> = y.iter().map(|&i| level(i)).collect();
        prop_assume!(yt.iter().any(|l| *l != yt[0]));
        let proba: Vec<[f64; 3]> = scores.chunks(3).map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]).collect();
        // Strictly increasing but nonlinear.
        let warped: Vec<[f64; 3]> = proba.iter().map(|r| r.map(|s| (a * s + b).exp())).collect();
        let before = ovr_auc(&yt, &proba).unwrap();
        let after = ovr_auc(&yt, &warped).unwrap();
        for c in 0..3 {
            match (before.per_class[c], after.per_class[c]) {
                (Some(x), Some(z)) => prop_assert!((x - z).abs() < 1e-12),
                (x, z) => prop_assert_eq!(x, z),
            }
        }
    }

    #[test]
    fn metrics_lie_in_the_unit_interval((y, p) in (1usize..60).prop_flat_map(|n| (labels(n), labels(n)))) {
        let yt: Vec<Level> = y.iter().map(|&i| level(i)).collect();
        let yp: Vec<Level> = p.iter().map(|&i| level(i)).collect();
        let acc = accuracy(&yt, &yp).unwrap();
        let f1 = macro_f1(&yt, &yp).unwrap();
        prop_assert!((0.0..=1.0).contains(&acc) && (0.0..=1.0).contains(&f1));
    }
}
