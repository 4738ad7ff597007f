//! Multinomial logistic regression with an L2 penalty on the weights.
//!
//! Objective: `sum_i CE(softmax(W x_i + b), y_i) + ||W||^2 / (2C)`; biases
//! are not penalized. Minimized from zero by L-BFGS with an Armijo
//! backtracking line search, so every accepted step decreases the objective.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_rows, class_indices, NUM_CLASSES};
use crate::math::{dot, log_sum_exp, norm, softmax_in_place};
use crate::{Error, Level, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub c: f64,
    /// Stop once the gradient 2-norm is at or below this.
    pub tolerance: f64,
    pub max_iter: usize,
    pub history: usize,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig { c: 1.0, tolerance: 1e-6, max_iter: 1000, history: 10 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimReport {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Objective after each accepted step, starting at the initial point.
    pub objective_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub dim: usize,
    /// `NUM_CLASSES x dim`, row-major.
    pub weights: Vec<f64>,
    pub biases: [f64; NUM_CLASSES],
    pub c: f64,
    pub report: OptimReport,
}

impl LrModel {
    pub fn zeros(dim: usize) -> Self {
        LrModel {
            dim,
            weights: vec![0.0; NUM_CLASSES * dim],
            biases: [0.0; NUM_CLASSES],
            c: 1.0,
            report: OptimReport::default(),
        }
    }

    pub fn logits(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        core::array::from_fn(|k| self.biases[k] + dot(&self.weights[k * self.dim..(k + 1) * self.dim], x))
    }

    pub fn predict_proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        let mut z = self.logits(x);
        softmax_in_place(&mut z);
        z
    }

    /// Parameters as `[W (row-major), b]`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.extend_from_slice(&self.biases);
        p
    }
}

/// Objective value and gradient at `params` (`[W, b]` layout).
pub fn lr_objective(params: &[f64], x: &[Vec<f64>], y: &[usize], dim: usize, c: f64) -> (f64, Vec<f64>) {
    let nw = NUM_CLASSES * dim;
    let (w, b) = params.split_at(nw);
    let mut grad = vec![0.0; params.len()];
    let mut f = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let mut z: [f64; NUM_CLASSES] = core::array::from_fn(|k| b[k] + dot(&w[k * dim..(k + 1) * dim], row));
        f += log_sum_exp(&z) - z[label];
        softmax_in_place(&mut z);
        for k in 0..NUM_CLASSES {
            let r = z[k] - if k == label { 1.0 } else { 0.0 };
            for (g, v) in grad[k * dim..(k + 1) * dim].iter_mut().zip(row) {
                *g += r * v;
            }
            grad[nw + k] += r;
        }
    }
    let inv_c = 1.0 / c;
    f += 0.5 * inv_c * dot(w, w);
    for (g, wi) in grad[..nw].iter_mut().zip(w) {
        *g += inv_c * wi;
    }
    (f, grad)
}

/// Relative change in the objective below which its values are treated as
/// rounding noise.
pub const FLAT_TOLERANCE: f64 = 1e-12;

pub fn train_lr(x: &[Vec<f64>], labels: &[Level], cfg: &LrConfig) -> Result<LrModel> {
    let dim = check_rows(x, labels)?;
    if !(cfg.c > 0.0) {
        return Err(Error::InvalidParameter("LR requires C > 0".into()));
    }
    let y = class_indices(labels)?;
    let eval = |p: &[f64]| lr_objective(p, x, &y, dim, cfg.c);

    let mut p = vec![0.0; NUM_CLASSES * dim + NUM_CLASSES];
    let (mut f, mut g) = eval(&p);
    let mut report = OptimReport { objective_trace: vec![f], ..Default::default() };
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for iter in 0..cfg.max_iter {
        report.iterations = iter;
        let gnorm = norm(&g);
        report.gradient_norm = gnorm;
        if gnorm <= cfg.tolerance {
            report.converged = true;
            break;
        }
        let mut d = two_loop(&g, &memory);
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if memory.is_empty() { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let (ft, gt) = eval(&trial);
            if !ft.is_finite() {
                return Err(Error::NonFinite { context: "logistic regression", iteration: iter, checkpoint: Some(p) });
            }
            // Armijo, or once f can no longer resolve the decrease, the
            // approximate Wolfe test on the directional derivative, which is
            // sound because the objective is convex.
            let armijo = ft <= f + 1e-4 * step * slope;
            let flat = (ft - f).abs() <= FLAT_TOLERANCE * f.abs();
            if armijo || (flat && dot(&gt, &d) <= -0.8 * slope) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else {
            // No representable decrease left along d; we are at the optimum to
            // machine precision.
            break;
        };
        let s: Vec<f64> = trial.iter().zip(&p).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if memory.len() == cfg.history.max(1) {
                memory.pop_front();
            }
            memory.push_back((s, yv, 1.0 / sy));
        }
        p = trial;
        f = ft;
        g = gt;
        report.objective_trace.push(f);
        report.iterations = iter + 1;
    }
    report.gradient_norm = norm(&g);
    report.converged = report.gradient_norm <= cfg.tolerance;

    let biases = [p[NUM_CLASSES * dim], p[NUM_CLASSES * dim + 1], p[NUM_CLASSES * dim + 2]];
    p.truncate(NUM_CLASSES * dim);
    Ok(LrModel { dim, weights: p, biases, c: cfg.c, report })
}

/// L-BFGS two-loop recursion: returns `-H g`.
fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
