//! The four classifier families and the standardize-then-fit wrapper shared
//! by training, cross-validation and prediction.

mod lr;
mod nn;
mod standardize;
mod svm;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use lr::{lr_objective, train_lr, LrConfig, LrModel, OptimReport, FLAT_TOLERANCE};
pub use nn::{parameter_count, train_nn, AugHeadModel, Mlp, NnModel, TrainHistory, TrainerConfig, HIDDEN};
pub use standardize::{Standardizer, SD_FLOOR};
pub use svm::{kernel_matrix, rbf, scale_gamma, solve_dual, train_svm, BinarySvm, DualSolution, SvmConfig, SvmModel};

use crate::features::{Block, BlockSet, FeatureVector};
use crate::math::{argmax, softmax_in_place};
use crate::{Error, Level, Result};

pub const NUM_CLASSES: usize = 3;

/// Input width of the augmented head: basic + dynamic + transformer.
pub const AUG_HEAD_WIDTH: usize = 646;

/// Row width shared by all rows, with a label per row.
pub(crate) fn check_rows(x: &[Vec<f64>], labels: &[Level]) -> Result<usize> {
    if x.len() != labels.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: labels.len() });
    }
    let d = x.first().ok_or(Error::EmptyInput("no training rows"))?.len();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(Error::WidthMismatch { expected: d, got: r.len() });
    }
    Ok(d)
}

/// Class indices; fails unless at least two classes are present.
pub(crate) fn class_indices(labels: &[Level]) -> Result<Vec<usize>> {
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    if y.iter().all(|&c| c == y[0]) {
        return Err(Error::Degenerate("training labels contain a single class"));
    }
    Ok(y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Lr(LrConfig),
    Svm(SvmConfig),
    Nn(TrainerConfig),
    AugHead(TrainerConfig),
}

impl ModelSpec {
    /// Short name used in reports.
    pub fn tag(&self) -> &'static str {
        match self {
            ModelSpec::Lr(_) => "LR",
            ModelSpec::Svm(_) => "SVM",
            ModelSpec::Nn(_) => "NN",
            ModelSpec::AugHead(_) => "AugHead",
        }
    }

    /// Same spec with the trainer seed replaced (no-op for LR and SVM).
    pub fn with_seed(&self, seed: u64) -> ModelSpec {
        match self {
            ModelSpec::Nn(t) => ModelSpec::Nn(TrainerConfig { seed, ..*t }),
            ModelSpec::AugHead(t) => ModelSpec::AugHead(TrainerConfig { seed, ..*t }),
            other => other.clone(),
        }
    }

    /// Blocks the model needs, if it constrains them.
    pub fn required_blocks(&self) -> Option<BlockSet> {
        match self {
            ModelSpec::AugHead(_) => Some(BlockSet::new([Block::Basic, Block::Dynamic, Block::Transformer])),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Lr(LrModel),
    Svm(SvmModel),
    Nn(NnModel),
    AugHead(AugHeadModel),
}

impl Model {
    pub fn tag(&self) -> &'static str {
        match self {
            Model::Lr(_) => "LR",
            Model::Svm(_) => "SVM",
            Model::Nn(_) => "NN",
            Model::AugHead(_) => "AugHead",
        }
    }

    /// Class probabilities for an already standardized row. SVM decision
    /// values are passed through a softmax: a ranking score, not calibrated.
    pub fn proba_row(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        match self {
            Model::Lr(m) => m.predict_proba_row(x),
            Model::Svm(m) => {
                let mut z = m.decision_values(x);
                softmax_in_place(&mut z);
                z
            }
            Model::Nn(m) => m.predict_proba_row(x),
            Model::AugHead(m) => m.nn.predict_proba_row(x),
        }
    }
}

/// A model together with the standardizer fitted on its training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedClassifier {
    pub standardizer: Standardizer,
    pub model: Model,
}

impl FittedClassifier {
    pub fn input_width(&self) -> usize {
        self.standardizer.width()
    }

    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<[f64; NUM_CLASSES]>> {
        rows.iter()
            .map(|r| Ok(self.model.proba_row(&self.standardizer.transform(r)?)))
            .collect()
    }

    /// Argmax class; ties go to the lower class index.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<Level>> {
        Ok(self
            .predict_proba(rows)?
            .iter()
            .map(|p| Level::from_index(argmax(p)).expect("3 classes"))
            .collect())
    }
}

/// Standardizes `rows` and trains the model described by `spec`.
pub fn fit(spec: &ModelSpec, rows: &[Vec<f64>], labels: &[Level]) -> Result<FittedClassifier> {
    check_rows(rows, labels)?;
    let standardizer = Standardizer::fit(rows)?;
    let z = standardizer.transform_all(rows)?;
    let model = match spec {
        ModelSpec::Lr(c) => Model::Lr(train_lr(&z, labels, c)?),
        ModelSpec::Svm(c) => Model::Svm(train_svm(&z, labels, c)?),
        ModelSpec::Nn(t) => Model::Nn(train_nn(&z, labels, t)?),
        ModelSpec::AugHead(t) => {
            if standardizer.width() != AUG_HEAD_WIDTH {
                return Err(Error::WidthMismatch { expected: AUG_HEAD_WIDTH, got: standardizer.width() });
            }
            Model::AugHead(AugHeadModel { nn: train_nn(&z, labels, t)?, provenance: String::new() })
        }
    };
    Ok(FittedClassifier { standardizer, model })
}

/// Trains the augmented head on feature vectors carrying basic, dynamic and
/// transformer blocks; every user lacking an embedding is reported.
pub fn train_aug_head(
    features: &[FeatureVector],
    labels: &[Level],
    trainer: &TrainerConfig,
    provenance: &str,
) -> Result<FittedClassifier> {
    let missing: Vec<String> =
        features.iter().filter(|f| f.block(Block::Transformer).is_none()).map(|f| f.user_id.clone()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingEmbedding(missing));
    }
    let blocks = BlockSet::new([Block::Basic, Block::Dynamic, Block::Transformer]);
    let rows = features.iter().map(|f| f.select(&blocks)).collect::<Result<Vec<_>>>()?;
    let mut fitted = fit(&ModelSpec::AugHead(*trainer), &rows, labels)?;
    if let Model::AugHead(m) = &mut fitted.model {
        m.provenance = provenance.into();
    }
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn width_mismatch_at_prediction() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]];
        let y = [Level::Low, Level::Neutral, Level::High];
        let m = fit(&ModelSpec::Lr(LrConfig::default()), &x, &y).unwrap();
        assert!(matches!(m.predict(&[vec![1.0]]), Err(Error::WidthMismatch { expected: 2, got: 1 })));
        for p in m.predict_proba(&x).unwrap() {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn aug_head_needs_646_columns() {
        let x = vec![vec![0.0; 10], vec![1.0; 10]];
        let y = [Level::Low, Level::High];
        assert!(matches!(
            fit(&ModelSpec::AugHead(TrainerConfig::default()), &x, &y),
            Err(Error::WidthMismatch { expected: 646, .. })
        ));
    }

    #[test]
    fn aug_head_reports_missing_embeddings() {
        let mut a = FeatureVector::new("a");
        a.insert(Block::Basic, vec![0.0; 41]).unwrap();
        let b = a.clone();
        let err = train_aug_head(&[a, b], &[Level::Low, Level::High], &TrainerConfig::default(), "t").unwrap_err();
        match err {
            Error::MissingEmbedding(ids) => assert_eq!(ids, vec!["a", "a"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_serde_shape() {
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"svm","c":2.0}"#).unwrap();
        assert_eq!(s, ModelSpec::Svm(SvmConfig { c: 2.0, ..Default::default() }));
        assert_eq!(s.tag(), "SVM");
    }
}
