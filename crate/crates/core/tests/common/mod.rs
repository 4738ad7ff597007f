//! Reference implementations used as test oracles. They are deliberately
//! naive and share no code with the library.
#![allow(dead_code)]

use cyberaggr_core::Level;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn level(i: usize) -> Level {
    Level::from_index(i).unwrap()
}

/// Macro-F1 from per-class TP/FP/FN counted pairwise; absent classes count as 0.
pub fn brute_macro_f1(y_true: &[Level], y_pred: &[Level]) -> f64 {
    let mut total = 0.0;
    for c in Level::ALL {
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for (t, p) in y_true.iter().zip(y_pred) {
            match (*t == c, *p == c) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fn_ += 1.0,
                _ => {}
            }
        }
        // F1 = 2TP / (2TP + FP + FN), which is 0 when the class is absent.
        let denom = 2.0 * tp + fp + fn_;
        total += if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
    }
    total / 3.0
}

/// Fraction of concordant (positive, negative) pairs, ties worth one half.
pub fn brute_binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let (mut pairs, mut wins) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

pub fn brute_ovr_auc(y_true: &[Level], proba: &[[f64; 3]]) -> (f64, [Option<f64>; 3]) {
    let mut per = [None; 3];
    for c in Level::ALL {
        let scores: Vec<f64> = proba.iter().map(|p| p[c.index()]).collect();
        let positive: Vec<bool> = y_true.iter().map(|l| *l == c).collect();
        per[c.index()] = brute_binary_auc(&scores, &positive);
    }
    let defined: Vec<f64> = per.iter().flatten().copied().collect();
    (defined.iter().sum::<f64>() / defined.len() as f64, per)
}

/// Random labels and coarse scores (ties are frequent). At least two classes
/// are present so that some AUC is defined.
pub fn random_instance(rng: &mut impl Rng) -> (Vec<Level>, Vec<Level>, Vec<[f64; 3]>) {
    loop {
        let n = rng.random_range(2..=50);
        let y: Vec<Level> = (0..n).map(|_| level(rng.random_range(0..3))).collect();
        if y.iter().all(|l| *l == y[0]) {
            continue;
        }
        let pred: Vec<Level> = (0..n).map(|_| level(rng.random_range(0..3))).collect();
        let proba: Vec<[f64; 3]> = (0..n)
            .map(|_| {
                let raw: [f64; 3] = core::array::from_fn(|_| rng.random_range(0..8) as f64 + 1.0);
                let s: f64 = raw.iter().sum();
                raw.map(|v| v / s)
            })
            .collect();
        return (y, pred, proba);
    }
}

/// Central finite difference of `f` at `x` along coordinate `i`.
pub fn central_difference(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    p[i] = x[i] + h;
    let up = f(&p);
    p[i] = x[i] - h;
    let down = f(&p);
    (up - down) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|)`, with the denominator floored so that
/// coordinates whose true derivative is zero are compared absolutely.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Dual objective `0.5 a'Qa - sum a` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(kernel: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i * n + j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Minimum of the dual objective over a grid with spacing `step` on
/// `[0, C]`. The last coordinate is fixed by `y'a = 0` and kept only when it
/// lands inside the box.
pub fn grid_dual_minimum(kernel: &[f64], y: &[f64], c: f64, step: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let levels = (c / step).round() as usize + 1;
    let mut idx = vec![0usize; n - 1];
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let mut alpha = vec![0.0; n];
    loop {
        let mut s = 0.0;
        for k in 0..n - 1 {
            alpha[k] = idx[k] as f64 * step;
            s += y[k] * alpha[k];
        }
        let last = -s * y[n - 1];
        if (-1e-12..=c + 1e-12).contains(&last) {
            alpha[n - 1] = last.clamp(0.0, c);
            let f = dual_objective(kernel, y, &alpha);
            if f < best.0 {
                best = (f, alpha.clone());
            }
        }
        let mut k = 0;
        loop {
            if k == n - 1 {
                return best;
            }
            idx[k] += 1;
            if idx[k] < levels {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
