mod common;

use common::{central_difference, relative_error, rng};
use cyberaggr_core::models::{lr_objective, parameter_count, Mlp, AUG_HEAD_WIDTH, NUM_CLASSES};
use proptest::prelude::*;
use rand::Rng;

const STEP: f64 = 1e-5;

#[test]
fn lr_gradient_matches_finite_differences() {
    let (dim, n) = (134, 30);
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<usize> = (0..n).map(|_| r.random_range(0..NUM_CLASSES)).collect();
        let params: Vec<f64> = (0..NUM_CLASSES * (dim + 1)).map(|_| r.random_range(-0.5..0.5)).collect();
        let (_, grad) = lr_objective(&params, &x, &y, dim, 1.0);
        let mut f = |p: &[f64]| lr_objective(p, &x, &y, dim, 1.0).0;
        for (i, g) in grad.iter().enumerate() {
            worst = worst.max(relative_error(*g, central_difference(&mut f, &params, i, STEP)));
        }
    }
    assert!(worst < 1e-4, "max relative error {worst:e}");
}

#[test]
fn head_gradient_matches_finite_differences() {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut net = Mlp::init(Mlp::topology(AUG_HEAD_WIDTH), &mut r);
        assert_eq!(net.parameter_count(), 93_251);
        // Move off the zero-bias initialization.
        for p in net.params.iter_mut() {
            *p += r.random_range(-0.02..0.02);
        }
        let rows: Vec<Vec<f64>> =
            (0..5).map(|_| (0..AUG_HEAD_WIDTH).map(|_| r.random_range(-1.5..1.5)).collect()).collect();
        let batch: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let y: Vec<usize> = (0..5).map(|_| r.random_range(0..NUM_CLASSES)).collect();
        let (_, grad) = net.loss_and_grad(&batch, &y);

        // Every layer's weights and biases, sampled.
        let mut coords = Vec::new();
        let mut offset = 0;
        for w in net.sizes.clone().windows(2) {
            let (nw, nb) = (w[0] * w[1], w[1]);
            coords.extend((0..12).map(|_| offset + r.random_range(0..nw)));
            coords.extend((0..6).map(|_| offset + nw + r.random_range(0..nb)));
            offset += nw + nb;
        }
        let base = net.params.clone();
        let mut f = |p: &[f64]| {
            net.params.copy_from_slice(p);
            net.loss(&batch, &y)
        };
        for &i in &coords {
            worst = worst.max(relative_error(grad[i], central_difference(&mut f, &base, i, STEP)));
        }
    }
    assert!(worst < 1e-4, "max relative error {worst:e}");
}

#[test]
fn published_head_size() {
    // 128*646 + 128 + 128*64 + 64 + 64*32 + 32 + 32*3 + 3
    assert_eq!(parameter_count(646), 82_688 + 128 + 8_192 + 64 + 2_048 + 32 + 96 + 3);
    assert_eq!(parameter_count(646), 93_251);
    assert_eq!(parameter_count(434), 66_115);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parameter_count_formula_holds(d in 1usize..1500) {
        let net = Mlp::init(Mlp::topology(d), &mut rng(d as u64));
        let expected = 128 * d + 128 + 8192 + 64 + 2048 + 32 + 96 + 3;
        prop_assert_eq!(net.parameter_count(), expected);
        prop_assert_eq!(parameter_count(d), expected);
        prop_assert_eq!(&net.sizes[1..], &[128, 64, 32, 3][..]);
    }
}
