//! Stratified cross-validation, the holdout alternative and the
//! label-permutation baseline.
//!
//! Standardizers and models are fitted on training rows only. Headline
//! metrics come from the pooled out-of-fold predictions; per-fold values are
//! kept for dispersion.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::BlockSet;
use crate::metrics::{accuracy, ovr_auc, ConfusionMatrix};
use crate::models::{fit, ModelSpec, NUM_CLASSES};
use crate::{Error, Level, Result, Target};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    KFold { k: usize, seed: u64 },
    Holdout { test_fraction: f64, seed: u64 },
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol::KFold { k: 5, seed: 42 }
    }
}

impl Protocol {
    pub fn seed(&self) -> u64 {
        match *self {
            Protocol::KFold { seed, .. } | Protocol::Holdout { seed, .. } => seed,
        }
    }

    /// Test index sets, each sorted ascending.
    pub fn split(&self, labels: &[Level]) -> Result<Vec<Vec<usize>>> {
        match *self {
            Protocol::KFold { k, seed } => stratified_kfold(labels, k, seed),
            Protocol::Holdout { test_fraction, seed } => Ok(vec![stratified_holdout(labels, test_fraction, seed)?]),
        }
    }
}

fn by_class(labels: &[Level]) -> [Vec<usize>; NUM_CLASSES] {
    let mut out: [Vec<usize>; NUM_CLASSES] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        out[l.index()].push(i);
    }
    out
}

/// Each class is shuffled with the seeded generator and dealt round-robin;
/// the deal position carries over between classes so fold sizes stay within
/// one of each other. A class smaller than `k` is an error unless `k == n`
/// (leave-one-out).
pub fn stratified_kfold(labels: &[Level], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(alloc::format!("k = {k} must be in 2..={n}")));
    }
    let classes = by_class(labels);
    if k < n {
        for (c, members) in classes.iter().enumerate() {
            if !members.is_empty() && members.len() < k {
                return Err(Error::ClassTooSmall { class: Level::ALL[c], count: members.len(), k });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut pos = 0;
    for mut members in classes {
        members.shuffle(&mut rng);
        for i in members {
            folds[pos % k].push(i);
            pos += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Per class, `round(count * test_fraction)` rows go to the test set.
pub fn stratified_holdout(labels: &[Level], test_fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter("test_fraction must be in (0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::new();
    for mut members in by_class(labels) {
        members.shuffle(&mut rng);
        let take = libm::round(members.len() as f64 * test_fraction) as usize;
        test.extend_from_slice(&members[..take]);
    }
    if test.is_empty() || test.len() == labels.len() {
        return Err(Error::InvalidParameter("holdout leaves an empty train or test set".into()));
    }
    test.sort_unstable();
    Ok(test)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    pub acc: f64,
    pub macro_f1: f64,
    /// Undefined when the test fold holds a single class.
    pub ovr_auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Level,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub target: Target,
    pub features: BlockSet,
    pub model: String,
    pub protocol: Protocol,
    /// Rows with a pooled out-of-fold prediction.
    pub n: usize,
    pub acc: f64,
    pub macro_f1: f64,
    pub ovr_auc: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    pub folds: Vec<FoldMetrics>,
}

/// What is being predicted from which blocks; metadata for the report.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalContext {
    pub target: Target,
    pub features: BlockSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldOutcome {
    pub test: Vec<usize>,
    pub proba: Vec<[f64; NUM_CLASSES]>,
}

/// Fits on every row outside `test` and predicts the rows in it. Trainer
/// seeds are offset by the fold index.
pub fn run_fold(rows: &[Vec<f64>], labels: &[Level], spec: &ModelSpec, test: &[usize], fold: usize) -> Result<FoldOutcome> {
    let mut is_test = vec![false; rows.len()];
    test.iter().for_each(|&i| is_test[i] = true);
    let (mut tx, mut ty) = (Vec::new(), Vec::new());
    for (i, t) in is_test.iter().enumerate() {
        if !t {
            tx.push(rows[i].clone());
            ty.push(labels[i]);
        }
    }
    let spec = match spec {
        ModelSpec::Nn(t) | ModelSpec::AugHead(t) => spec.with_seed(t.seed.wrapping_add(fold as u64)),
        _ => spec.clone(),
    };
    let model = fit(&spec, &tx, &ty)?;
    let test_rows: Vec<Vec<f64>> = test.iter().map(|&i| rows[i].clone()).collect();
    Ok(FoldOutcome { test: test.to_vec(), proba: model.predict_proba(&test_rows)? })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    pub report: EvalReport,
    /// Row indices in pooled order, with their out-of-fold probabilities.
    pub rows: Vec<usize>,
    pub proba: Vec<[f64; NUM_CLASSES]>,
    pub predictions: Vec<Level>,
}

fn predict_label(p: &[f64; NUM_CLASSES]) -> Level {
    Level::from_index(crate::math::argmax(p)).expect("3 classes")
}

/// Combines fold outcomes (in fold order) into pooled and per-fold metrics.
pub fn pool(
    labels: &[Level],
    outcomes: &[FoldOutcome],
    ctx: &EvalContext,
    spec: &ModelSpec,
    protocol: Protocol,
) -> Result<CvOutcome> {
    let mut rows = Vec::new();
    let mut proba = Vec::new();
    let mut folds = Vec::new();
    for (f, o) in outcomes.iter().enumerate() {
        let truth: Vec<Level> = o.test.iter().map(|&i| labels[i]).collect();
        let pred: Vec<Level> = o.proba.iter().map(predict_label).collect();
        folds.push(FoldMetrics {
            fold: f,
            n_test: truth.len(),
            acc: accuracy(&truth, &pred)?,
            macro_f1: ConfusionMatrix::new(&truth, &pred)?.macro_f1(),
            ovr_auc: ovr_auc(&truth, &o.proba).ok().map(|a| a.macro_auc),
        });
        rows.extend_from_slice(&o.test);
        proba.extend_from_slice(&o.proba);
    }
    let truth: Vec<Level> = rows.iter().map(|&i| labels[i]).collect();
    let predictions: Vec<Level> = proba.iter().map(predict_label).collect();
    let confusion = ConfusionMatrix::new(&truth, &predictions)?;
    let auc = ovr_auc(&truth, &proba)?;
    let per_class = Level::ALL
        .iter()
        .map(|&c| ClassMetrics {
            label: c,
            support: truth.iter().filter(|l| **l == c).count(),
            precision: confusion.precision(c),
            recall: confusion.recall(c),
            f1: confusion.f1(c),
            auc: auc.per_class[c.index()],
        })
        .collect();
    let report = EvalReport {
        target: ctx.target,
        features: ctx.features.clone(),
        model: spec.tag().into(),
        protocol,
        n: truth.len(),
        acc: accuracy(&truth, &predictions)?,
        macro_f1: confusion.macro_f1(),
        ovr_auc: auc.macro_auc,
        per_class,
        confusion,
        folds,
    };
    Ok(CvOutcome { report, rows, proba, predictions })
}

/// Sequential cross-validation; see [`run_fold`] and [`pool`] to run folds
/// concurrently.
pub fn cross_validate(
    rows: &[Vec<f64>],
    labels: &[Level],
    spec: &ModelSpec,
    protocol: Protocol,
    ctx: &EvalContext,
) -> Result<CvOutcome> {
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch { left: rows.len(), right: labels.len() });
    }
    let splits = protocol.split(labels)?;
    let outcomes = splits
        .iter()
        .enumerate()
        .map(|(f, test)| run_fold(rows, labels, spec, test, f))
        .collect::<Result<Vec<_>>>()?;
    pool(labels, &outcomes, ctx, spec, protocol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationRun {
    pub shuffle: usize,
    pub acc: f64,
    pub macro_f1: f64,
    pub ovr_auc: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PermutationBaseline {
    pub runs: Vec<PermutationRun>,
}

impl PermutationBaseline {
    fn mean(&self, f: impl Fn(&PermutationRun) -> f64) -> Option<f64> {
        (!self.runs.is_empty()).then(|| self.runs.iter().map(f).sum::<f64>() / self.runs.len() as f64)
    }

    pub fn mean_acc(&self) -> Option<f64> {
        self.mean(|r| r.acc)
    }

    pub fn mean_macro_f1(&self) -> Option<f64> {
        self.mean(|r| r.macro_f1)
    }

    pub fn mean_auc(&self) -> Option<f64> {
        self.mean(|r| r.ovr_auc)
    }
}

/// Cross-validates against `n_shuffles` seeded permutations of the labels.
pub fn permutation_baseline(
    rows: &[Vec<f64>],
    labels: &[Level],
    spec: &ModelSpec,
    protocol: Protocol,
    n_shuffles: usize,
    seed: u64,
) -> Result<PermutationBaseline> {
    let ctx = EvalContext { target: Target::SocialExclusion, features: BlockSet::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PermutationBaseline::default();
    for shuffle in 0..n_shuffles {
        let mut shuffled = labels.to_vec();
        shuffled.shuffle(&mut rng);
        let r = cross_validate(rows, &shuffled, spec, protocol, &ctx)?.report;
        out.runs.push(PermutationRun { shuffle, acc: r.acc, macro_f1: r.macro_f1, ovr_auc: r.ovr_auc });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LrConfig;

    fn labels(n: usize) -> Vec<Level> {
        (0..n).map(|i| Level::from_index((i * 7 + i / 3) % 3).unwrap()).collect()
    }

    #[test]
    fn folds_partition_and_stratify() {
        let y = labels(101);
        let folds = stratified_kfold(&y, 5, 42).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        for class in Level::ALL {
            let total = y.iter().filter(|l| **l == class).count() as f64;
            for f in &folds {
                let in_fold = f.iter().filter(|&&i| y[i] == class).count() as f64;
                assert!((in_fold - total / 5.0).abs() <= 1.0);
            }
        }
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(folds, stratified_kfold(&y, 5, 42).unwrap());
        assert_ne!(folds, stratified_kfold(&y, 5, 43).unwrap());
    }

    #[test]
    fn small_class_is_rejected() {
        let mut y = vec![Level::Low; 10];
        y.extend([Level::High; 2]);
        assert!(matches!(stratified_kfold(&y, 5, 1), Err(Error::ClassTooSmall { count: 2, k: 5, .. })));
        assert!(stratified_kfold(&y, 2, 1).is_ok());
    }

    #[test]
    fn leave_one_out_pools_every_row() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 3) as f64 + 0.1 * i as f64]).collect();
        let y: Vec<Level> = (0..12).map(|i| Level::from_index(i % 3).unwrap()).collect();
        let ctx = EvalContext { target: Target::GuiltInduction, features: BlockSet::default() };
        let out = cross_validate(&x, &y, &ModelSpec::Lr(LrConfig::default()), Protocol::KFold { k: 12, seed: 0 }, &ctx)
            .unwrap();
        assert_eq!(out.report.n, 12);
        assert_eq!(out.report.folds.len(), 12);
        assert!(out.report.folds.iter().all(|f| f.ovr_auc.is_none()));
    }

    #[test]
    fn holdout_is_stratified() {
        let y = labels(100);
        let test = stratified_holdout(&y, 0.2, 9).unwrap();
        assert!((18..=22).contains(&test.len()));
        assert!(stratified_holdout(&y, 1.0, 9).is_err());
    }

    #[test]
    fn zero_shuffles_is_empty() {
        let b = permutation_baseline(&[], &[], &ModelSpec::Lr(LrConfig::default()), Protocol::default(), 0, 1).unwrap();
        assert!(b.runs.is_empty());
        assert_eq!(b.mean_acc(), None);
    }
}
