//! Accuracy, three-class macro-F1 and one-vs-rest AUC.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::models::NUM_CLASSES;
use crate::{Error, Level, Result};

fn check(y_true: &[Level], y_pred_len: usize) -> Result<()> {
    if y_true.len() != y_pred_len {
        return Err(Error::LengthMismatch { left: y_true.len(), right: y_pred_len });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyInput("metrics need at least one row"));
    }
    Ok(())
}

pub fn accuracy(y_true: &[Level], y_pred: &[Level]) -> Result<f64> {
    check(y_true, y_pred.len())?;
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Rows are true labels, columns predictions, both ordered (-1, 0, +1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[usize; NUM_CLASSES]; NUM_CLASSES]);

impl ConfusionMatrix {
    pub fn new(y_true: &[Level], y_pred: &[Level]) -> Result<Self> {
        check(y_true, y_pred.len())?;
        let mut m = [[0; NUM_CLASSES]; NUM_CLASSES];
        for (t, p) in y_true.iter().zip(y_pred) {
            m[t.index()][p.index()] += 1;
        }
        Ok(ConfusionMatrix(m))
    }

    pub fn total(&self) -> usize {
        self.0.iter().flatten().sum()
    }

    /// Precision, 0 when the class is never predicted.
    pub fn precision(&self, class: Level) -> f64 {
        let c = class.index();
        let predicted: usize = (0..NUM_CLASSES).map(|r| self.0[r][c]).sum();
        if predicted == 0 {
            0.0
        } else {
            self.0[c][c] as f64 / predicted as f64
        }
    }

    /// Recall, 0 when the class never occurs.
    pub fn recall(&self, class: Level) -> f64 {
        let c = class.index();
        let actual: usize = self.0[c].iter().sum();
        if actual == 0 {
            0.0
        } else {
            self.0[c][c] as f64 / actual as f64
        }
    }

    /// Harmonic mean of precision and recall; 0 when both are 0.
    pub fn f1(&self, class: Level) -> f64 {
        let (p, r) = (self.precision(class), self.recall(class));
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    /// Unweighted mean of the three per-class F1 values.
    pub fn macro_f1(&self) -> f64 {
        Level::ALL.iter().map(|&c| self.f1(c)).sum::<f64>() / NUM_CLASSES as f64
    }
}

pub fn macro_f1(y_true: &[Level], y_pred: &[Level]) -> Result<f64> {
    Ok(ConfusionMatrix::new(y_true, y_pred)?.macro_f1())
}

/// Mann-Whitney AUC with midranks for ties. `None` unless both the positive
/// and the negative set are nonempty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|p| **p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean.
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| positive[k]).count() as f64 * midrank;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvrAuc {
    /// Mean over classes with a defined AUC.
    pub macro_auc: f64,
    /// Indexed by class; `None` when the class has no positives or no negatives.
    pub per_class: [Option<f64>; NUM_CLASSES],
    pub excluded: Vec<Level>,
}

pub fn ovr_auc(y_true: &[Level], proba: &[[f64; NUM_CLASSES]]) -> Result<OvrAuc> {
    check(y_true, proba.len())?;
    if y_true.iter().all(|l| *l == y_true[0]) {
        return Err(Error::AucUndefined);
    }
    let mut per_class = [None; NUM_CLASSES];
    let mut excluded = Vec::new();
    for class in Level::ALL {
        let scores: Vec<f64> = proba.iter().map(|p| p[class.index()]).collect();
        let positive: Vec<bool> = y_true.iter().map(|l| *l == class).collect();
        per_class[class.index()] = binary_auc(&scores, &positive);
        if per_class[class.index()].is_none() {
            excluded.push(class);
        }
    }
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    let macro_auc = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(OvrAuc { macro_auc, per_class, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use Level::*;

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[Low, High], &[Low, High]).unwrap(), 1.0);
        let acc = accuracy(&[Low, Neutral, High], &[Neutral, Neutral, High]).unwrap();
        assert!((acc - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(accuracy(&[], &[]), Err(Error::EmptyInput(_))));
        assert!(matches!(accuracy(&[Low], &[]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn hand_computed_macro_f1() {
        let cm = ConfusionMatrix([[2, 1, 0], [0, 2, 0], [1, 0, 2]]);
        assert!((cm.f1(Low) - 2.0 / 3.0).abs() < 1e-12);
        assert!((cm.f1(Neutral) - 0.8).abs() < 1e-12);
        assert!((cm.f1(High) - 0.8).abs() < 1e-12);
        assert!((cm.macro_f1() - (2.0 / 3.0 + 1.6) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn absent_class_still_divides_by_three() {
        let f = macro_f1(&[Low, High, High], &[Low, High, High]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn auc_cases() {
        let pos = [true, true, false, false];
        assert_eq!(binary_auc(&[0.9, 0.8, 0.2, 0.1], &pos), Some(1.0));
        assert_eq!(binary_auc(&[0.1, 0.2, 0.8, 0.9], &pos), Some(0.0));
        assert_eq!(binary_auc(&[0.9, 0.4, 0.6, 0.1], &pos), Some(0.75));
        assert_eq!(binary_auc(&[0.5, 0.5, 0.5, 0.5], &pos), Some(0.5));
        assert_eq!(binary_auc(&[0.5], &[true]), None);
    }

    #[test]
    fn ovr_excludes_missing_classes() {
        let y = [Low, High, Low, High];
        let p = [[0.8, 0.1, 0.1], [0.1, 0.1, 0.8], [0.6, 0.2, 0.2], [0.3, 0.3, 0.4]];
        let r = ovr_auc(&y, &p).unwrap();
        assert_eq!(r.excluded, vec![Neutral]);
        assert_eq!(r.per_class[Neutral.index()], None);
        assert_eq!(r.macro_auc, 1.0);
        assert!(matches!(ovr_auc(&[High, High], &[[0.0, 0.0, 1.0]; 2]), Err(Error::AucUndefined)));
    }
}
