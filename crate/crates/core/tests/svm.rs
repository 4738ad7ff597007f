mod common;

use common::{dual_objective, grid_dual_minimum};
use cyberaggr_core::models::{fit, kernel_matrix, solve_dual, train_svm, ModelSpec, SvmConfig};
use cyberaggr_core::Level;

fn xor() -> (Vec<Vec<f64>>, Vec<Level>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for r in [1.0, 2.0] {
        for (a, b) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            x.push(vec![a * r, b * r]);
            y.push(if a * b > 0.0 { Level::High } else { Level::Low });
        }
    }
    (x, y)
}

/// Largest KKT residual of a binary machine, measured on the margins `y f(x)`.
fn kkt_violation(x: &[Vec<f64>], yb: &[f64], alpha: &[f64], c: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for ((row, y), a) in x.iter().zip(yb).zip(alpha) {
        let m = y * f(row);
        let v = if *a <= 0.0 {
            (1.0 - m).max(0.0)
        } else if *a >= c {
            (m - 1.0).max(0.0)
        } else {
            (m - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

#[test]
fn xor_is_fitted_exactly_and_satisfies_kkt() {
    let (x, y) = xor();
    let fitted = fit(&ModelSpec::Svm(SvmConfig::default()), &x, &y).unwrap();
    let hits = fitted.predict(&x).unwrap().iter().zip(&y).filter(|(p, t)| p == t).count();
    assert_eq!(hits, x.len());

    let cfg = SvmConfig::default();
    let model = train_svm(&x, &y, &cfg).unwrap();
    for class in [Level::Low, Level::High] {
        let m = &model.machines[class.index()];
        let yb: Vec<f64> = y.iter().map(|l| if *l == class { 1.0 } else { -1.0 }).collect();
        let alpha: Vec<f64> = x
            .iter()
            .map(|row| m.support.iter().position(|s| s == row).map_or(0.0, |k| m.alpha[k]))
            .collect();
        assert!(alpha.iter().all(|a| (0.0..=cfg.c).contains(a)));
        let v = kkt_violation(&x, &yb, &alpha, cfg.c, |r| m.decision(r, model.gamma));
        assert!(v <= 1e-3, "{class:?}: KKT violation {v:e}");
    }
}

#[test]
fn dual_matches_exhaustive_grid() {
    let x = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.2],
        vec![0.3, 1.0],
        vec![1.2, 1.1],
        vec![2.0, 0.4],
        vec![0.8, 1.6],
    ];
    let y = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
    let c = 1.0;
    let k = kernel_matrix(&x, 0.5);
    let sol = solve_dual(&k, &y, c, 1e-8, 1_000_000);
    let smo = dual_objective(&k, &y, &sol.alpha);
    let (grid, _) = grid_dual_minimum(&k, &y, c, 0.05);
    assert!((smo - grid).abs() <= 1e-2, "smo {smo} grid {grid}");
    // The grid is a restriction of the feasible set.
    assert!(smo <= grid + 1e-9);
    assert!(sol.alpha.iter().all(|a| (0.0..=c).contains(a)));
    assert!(sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9);
}
