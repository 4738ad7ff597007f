//! RBF-kernel support vector classification, one-vs-rest over the three
//! classes. Each binary machine solves the C-SVC dual
//!
//! ```text
//! min  1/2 a'Qa - e'a   s.t.  y'a = 0,  0 <= a_i <= C,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! by SMO with second-order working-set selection. The solver stops when the
//! maximal KKT violation `m(a) - M(a)` falls below the tolerance.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_rows, class_indices, NUM_CLASSES};
use crate::math::exp;
use crate::{Error, Level, Result};

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    /// Kernel width; `None` selects `1 / (D * Var(X))`.
    pub gamma: Option<f64>,
    pub tolerance: f64,
    /// Iteration cap per binary machine; 0 means `max(10^7, 100 n)`.
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, gamma: None, tolerance: 1e-3, max_iter: 0 }
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    exp(-gamma * d2)
}

/// `1 / (D * Var(X))` over every entry of `x`; 1 when the variance vanishes.
pub fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(0, Vec::len);
    let n = (x.len() * d) as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / n;
    let var = x.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    /// `m(a) - M(a)` at exit.
    pub max_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// SMO over a precomputed kernel matrix (`n x n`, row-major) and labels in {-1, +1}.
pub fn solve_dual(kernel: &[f64], y: &[f64], c: f64, tolerance: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let k = |i: usize, j: usize| kernel[i * n + j];
    let q = |i: usize, j: usize| y[i] * y[j] * k(i, j);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut violation;
    loop {
        // Working set selection.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !is_upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
            } else if !is_lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let (grad_diff, in_low, g2) = if y[t] > 0.0 {
                (gmax + grad[t], !is_lower(alpha[t]), grad[t])
            } else {
                (gmax - grad[t], !is_upper(alpha[t]), -grad[t])
            };
            if !in_low {
                continue;
            }
            gmax2 = gmax2.max(g2);
            if let (Some(i), true) = (i_sel, grad_diff > 0.0) {
                let quad = k(i, i) + k(t, t) - 2.0 * y[i] * y[t] * k(i, t);
                let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        violation = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break };
        if violation < tolerance || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_ai, old_aj);
        if y[i] != y[j] {
            let quad = (k(i, i) + k(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (dai, daj) = (ai - old_ai, aj - old_aj);
        for t in 0..n {
            grad[t] += q(i, t) * dai + q(j, t) * daj;
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb, mut sum_free, mut n_free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    DualSolution {
        alpha,
        rho,
        max_violation: violation.max(0.0),
        iterations,
        converged: violation < tolerance || iterations < max_iter,
    }
}

/// One binary machine: support vectors with coefficients `alpha_i y_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub coef: Vec<f64>,
    pub rho: f64,
    /// Set when the class is absent from training: the machine always answers this value.
    pub constant: Option<f64>,
    pub max_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        if let Some(v) = self.constant {
            return v;
        }
        self.support.iter().zip(&self.coef).map(|(sv, c)| c * rbf(sv, x, gamma)).sum::<f64>() - self.rho
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub dim: usize,
    pub gamma: f64,
    pub c: f64,
    pub machines: Vec<BinarySvm>,
}

impl SvmModel {
    /// One-vs-rest decision value per class.
    pub fn decision_values(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        core::array::from_fn(|k| self.machines[k].decision(x, self.gamma))
    }

    pub fn all_converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }
}

pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(&x[i], &x[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

pub fn train_svm(x: &[Vec<f64>], labels: &[Level], cfg: &SvmConfig) -> Result<SvmModel> {
    let dim = check_rows(x, labels)?;
    if !(cfg.c > 0.0) {
        return Err(Error::InvalidParameter("SVM requires C > 0".into()));
    }
    let y = class_indices(labels)?;
    let gamma = match cfg.gamma {
        Some(g) if g > 0.0 => g,
        Some(_) => return Err(Error::InvalidParameter("SVM requires gamma > 0".into())),
        None => scale_gamma(x),
    };
    let n = x.len();
    let max_iter = if cfg.max_iter == 0 { (100 * n).max(10_000_000) } else { cfg.max_iter };
    let kernel = kernel_matrix(x, gamma);
    let machines = (0..NUM_CLASSES)
        .map(|class| {
            let yb: Vec<f64> = y.iter().map(|&c| if c == class { 1.0 } else { -1.0 }).collect();
            let positives = yb.iter().filter(|v| **v > 0.0).count();
            if positives == 0 || positives == n {
                let v = if positives == 0 { -1.0 } else { 1.0 };
                return BinarySvm {
                    support: Vec::new(),
                    alpha: Vec::new(),
                    coef: Vec::new(),
                    rho: -v,
                    constant: Some(v),
                    max_violation: 0.0,
                    iterations: 0,
                    converged: true,
                };
            }
            let sol = solve_dual(&kernel, &yb, cfg.c, cfg.tolerance, max_iter);
            let mut m = BinarySvm {
                support: Vec::new(),
                alpha: Vec::new(),
                coef: Vec::new(),
                rho: sol.rho,
                constant: None,
                max_violation: sol.max_violation,
                iterations: sol.iterations,
                converged: sol.converged,
            };
            for (t, a) in sol.alpha.iter().enumerate() {
                if *a > 0.0 {
                    m.support.push(x[t].clone());
                    m.alpha.push(*a);
                    m.coef.push(a * yb[t]);
                }
            }
            m
        })
        .collect();
    Ok(SvmModel { dim, gamma, c: cfg.c, machines })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Vec<Vec<f64>>, Vec<Level>) {
        let pts = [
            ([1.0, 1.0], Level::High),
            ([-1.0, -1.0], Level::High),
            ([2.0, 2.0], Level::High),
            ([-2.0, -2.0], Level::High),
            ([1.0, -1.0], Level::Low),
            ([-1.0, 1.0], Level::Low),
            ([2.0, -2.0], Level::Low),
            ([-2.0, 2.0], Level::Low),
        ];
        (pts.iter().map(|p| p.0.to_vec()).collect(), pts.iter().map(|p| p.1).collect())
    }

    #[test]
    fn xor_is_separated() {
        let (x, y) = xor();
        let m = train_svm(&x, &y, &SvmConfig::default()).unwrap();
        for (r, l) in x.iter().zip(&y) {
            assert_eq!(crate::math::argmax(&m.decision_values(r)), l.index());
        }
        for machine in &m.machines {
            assert!(machine.max_violation <= 1e-3);
            assert!(machine.alpha.iter().all(|a| *a >= 0.0 && *a <= m.c));
        }
        assert!(m.machines[Level::Neutral.index()].constant.is_some());
    }

    #[test]
    fn zero_c_is_rejected() {
        let (x, y) = xor();
        let cfg = SvmConfig { c: 0.0, ..Default::default() };
        assert!(matches!(train_svm(&x, &y, &cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn scale_gamma_of_unit_variance() {
        let x = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        assert!((scale_gamma(&x) - 0.5).abs() < 1e-15);
        assert_eq!(scale_gamma(&[vec![3.0, 3.0]]), 1.0);
    }
}
