mod common;

use common::{level, rng};
use cyberaggr_core::cv::{cross_validate, EvalContext, Protocol};
use cyberaggr_core::features::{Block, BlockSet};
use cyberaggr_core::metrics::ovr_auc;
use cyberaggr_core::models::{
    fit, LrConfig, Model, ModelSpec, Standardizer, TrainerConfig, AUG_HEAD_WIDTH, FLAT_TOLERANCE,
};
use cyberaggr_core::{Level, Target};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Three Gaussian blobs in `dim` dimensions, `per` points each.
fn blobs(dim: usize, per: usize, spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Level>) {
    let mut r = rng(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..per * 3 {
        let c = i % 3;
        x.push((0..dim).map(|d| if d == c { 3.0 } else { 0.0 } + spread * r.random_range(-1.0..1.0)).collect());
        y.push(level(c));
    }
    (x, y)
}

fn ctx() -> EvalContext {
    EvalContext { target: Target::SocialExclusion, features: BlockSet::new([Block::Basic]) }
}

#[test]
fn leave_one_out_pools_every_row() {
    let (x, y) = blobs(4, 7, 1.5, 1);
    let n = x.len();
    let out = cross_validate(&x, &y, &ModelSpec::Lr(LrConfig::default()), Protocol::KFold { k: n, seed: 3 }, &ctx())
        .unwrap();
    assert_eq!(out.report.n, n);
    assert_eq!(out.proba.len(), n);
    let mut rows = out.rows.clone();
    rows.sort_unstable();
    assert_eq!(rows, (0..n).collect::<Vec<_>>());
    assert_eq!(out.report.confusion.total(), n);
}

#[test]
fn same_seed_reproduces_folds_and_metrics() {
    let (x, y) = blobs(5, 20, 2.5, 2);
    let spec = ModelSpec::Nn(TrainerConfig { epochs: 15, ..TrainerConfig::default() });
    let protocol = Protocol::KFold { k: 5, seed: 42 };
    let a = cross_validate(&x, &y, &spec, protocol, &ctx()).unwrap();
    let b = cross_validate(&x, &y, &spec, protocol, &ctx()).unwrap();
    assert_eq!(protocol.split(&y).unwrap(), protocol.split(&y).unwrap());
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.report, b.report);
    assert!(a.proba.iter().zip(&b.proba).all(|(p, q)| p.map(f64::to_bits) == q.map(f64::to_bits)));
}

#[test]
fn standardizer_hand_example() {
    let s = Standardizer::fit(&[vec![0.0, 5.0], vec![2.0, 5.0]]).unwrap();
    let z = s.transform_all(&[vec![0.0, 5.0], vec![2.0, 5.0]]).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((z[0][0] + h).abs() < 1e-12 && (z[1][0] - h).abs() < 1e-12);
    assert_eq!((z[0][1], z[1][1]), (0.0, 0.0));
}

#[test]
fn lr_converges_on_toy_data() {
    let (x, y) = blobs(3, 10, 0.8, 4);
    let fitted = fit(&ModelSpec::Lr(LrConfig::default()), &x, &y).unwrap();
    let Model::Lr(m) = &fitted.model else { unreachable!() };
    assert!(m.report.converged && m.report.gradient_norm <= 1e-6);
    assert!(m.report.objective_trace.windows(2).all(|w| w[1] <= w[0] + FLAT_TOLERANCE * w[0].abs()));
    let hits = fitted.predict(&x).unwrap().iter().zip(&y).filter(|(p, t)| p == t).count();
    assert!(hits as f64 / x.len() as f64 >= 0.95);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shifting_all_lr_biases_keeps_predictions(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let (x, y) = blobs(4, 12, 3.0, seed);
        let mut fitted = fit(&ModelSpec::Lr(LrConfig::default()), &x, &y).unwrap();
        let before = fitted.predict(&x).unwrap();
        let Model::Lr(m) = &mut fitted.model else { unreachable!() };
        m.biases.iter_mut().for_each(|b| *b += shift);
        prop_assert_eq!(before, fitted.predict(&x).unwrap());
    }
}

/// Rows of width 646: noise in the first 134 columns, and an embedding that
/// is a latent score along a fixed unit direction plus isotropic noise. The
/// label trisects the latent score.
fn embedding_cohort(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Level>) {
    let mut r = rng(seed);
    let norm = 512f64.sqrt();
    let dir: Vec<f64> = (0..512).map(|_| StandardNormal.sample(&mut r)).map(|v: f64| v / norm).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut r);
        let mut row: Vec<f64> = (0..134).map(|_| StandardNormal.sample(&mut r)).collect();
        for d in &dir {
            let e: f64 = StandardNormal.sample(&mut r);
            row.push(2.0 * z * d + e / norm);
        }
        y.push(if z < -0.43 { Level::Low } else if z > 0.43 { Level::High } else { Level::Neutral });
        x.push(row);
    }
    (x, y)
}

#[test]
fn aug_head_learns_from_embeddings_and_uses_both_blocks() {
    let (x, y) = embedding_cohort(400, 8);
    let (train, test) = x.split_at(320);
    let spec = ModelSpec::AugHead(TrainerConfig { epochs: 60, ..TrainerConfig::default() });
    let fitted = fit(&spec, train, &y[..320]).unwrap();
    let proba = fitted.predict_proba(test).unwrap();
    let auc = ovr_auc(&y[320..], &proba).unwrap().macro_auc;
    assert!(auc >= 0.9, "held-out macro AUC {auc}");

    let base = fitted.predict(test).unwrap();
    for range in [0..134, 134..AUG_HEAD_WIDTH] {
        let ablated: Vec<Vec<f64>> = test
            .iter()
            .map(|r| r.iter().enumerate().map(|(i, v)| if range.contains(&i) { 0.0 } else { *v }).collect())
            .collect();
        let changed = fitted.predict(&ablated).unwrap().iter().zip(&base).filter(|(a, b)| a != b).count();
        assert!(changed > 0, "zeroing columns {range:?} changed nothing");
    }
}
