//! Declarative run configuration: one JSON document plus `--set a.b=v`
//! overrides.

use std::path::{Path, PathBuf};

use cyberaggr_core::cv::Protocol;
use cyberaggr_core::data::ActivityFilterPolicy;
use cyberaggr_core::features::{Block, BlockSet};
use cyberaggr_core::models::{LrConfig, ModelSpec, SvmConfig, TrainerConfig};
use cyberaggr_core::time::LocalClock;
use cyberaggr_core::Target;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{read_to_string, CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub posts: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub survey: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
    /// Falls back to the built-in lexicon.
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            posts: None,
            profiles: None,
            survey: None,
            word_vectors: None,
            lexicon: None,
            embeddings: None,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    /// Offset of the local clock used for hour-of-day and weekday features.
    pub utc_offset_hours: f64,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        FeatureSettings { utc_offset_hours: 8.0 }
    }
}

impl FeatureSettings {
    pub fn clock(&self) -> LocalClock {
        LocalClock { utc_offset_secs: (self.utc_offset_hours * 3600.0).round() as i64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lr,
    Svm,
    Nn,
    AugHead,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub blocks: BlockSet,
    pub models: Vec<ModelKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub lr: LrConfig,
    pub svm: SvmConfig,
    pub nn: TrainerConfig,
    pub aug_head: TrainerConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Kfold,
    Holdout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub protocol: ProtocolKind,
    pub k: usize,
    pub test_fraction: f64,
    pub seed: u64,
    /// Label-shuffled reruns per experiment row; 0 skips the baseline.
    pub permutation_shuffles: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings { protocol: ProtocolKind::Kfold, k: 5, test_fraction: 0.2, seed: 42, permutation_shuffles: 0 }
    }
}

impl EvalSettings {
    pub fn protocol(&self) -> Protocol {
        match self.protocol {
            ProtocolKind::Kfold => Protocol::KFold { k: self.k, seed: self.seed },
            ProtocolKind::Holdout => Protocol::Holdout { test_fraction: self.test_fraction, seed: self.seed },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub filter: ActivityFilterPolicy,
    pub features: FeatureSettings,
    pub targets: Vec<Target>,
    pub experiments: Vec<Experiment>,
    pub models: ModelParams,
    pub eval: EvalSettings,
}

pub fn behavior_blocks() -> BlockSet {
    BlockSet::new([Block::Basic, Block::Dynamic])
}

pub fn aug_head_blocks() -> BlockSet {
    BlockSet::new([Block::Basic, Block::Dynamic, Block::Transformer])
}

impl Default for RunConfig {
    fn default() -> Self {
        use ModelKind::*;
        RunConfig {
            paths: Paths::default(),
            filter: ActivityFilterPolicy::default(),
            features: FeatureSettings::default(),
            targets: Target::ALL.to_vec(),
            experiments: vec![
                Experiment { blocks: behavior_blocks(), models: vec![Lr, Svm, Nn] },
                Experiment {
                    blocks: BlockSet::new([Block::Basic, Block::Dynamic, Block::Content, Block::Emotion]),
                    models: vec![Lr, Svm, Nn],
                },
                Experiment { blocks: aug_head_blocks(), models: vec![AugHead] },
            ],
            models: ModelParams::default(),
            eval: EvalSettings::default(),
        }
    }
}

/// Sets `dotted.path` in `root` to `raw`, read as JSON when it parses and as
/// a string otherwise. Intermediate objects are created as needed.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override {assignment:?} is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(CliError::Validation(format!("override path {path:?} has an empty segment")));
        }
        if !node.is_object() {
            return Err(CliError::Validation(format!("override path {path:?} crosses a non-object value")));
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == keys.len() {
            map.insert(key.to_string(), value);
            return Ok(());
        }
        node = map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one key")
}

impl RunConfig {
    /// Reads `path` (or the defaults), applies overrides and resolves
    /// relative paths against the configuration file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut value = match path {
            Some(p) => serde_json::from_str(&read_to_string(p)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
            None => serde_json::to_value(RunConfig::default())?,
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let mut cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| CliError::Validation(format!("configuration: {e}")))?;
        let base = path.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve(&base);
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let ps = &mut self.paths;
        for p in [&mut ps.posts, &mut ps.profiles, &mut ps.survey, &mut ps.word_vectors, &mut ps.lexicon, &mut ps.embeddings]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut ps.output);
    }

    pub fn spec(&self, kind: ModelKind) -> ModelSpec {
        match kind {
            ModelKind::Lr => ModelSpec::Lr(self.models.lr),
            ModelKind::Svm => ModelSpec::Svm(self.models.svm),
            ModelKind::Nn => ModelSpec::Nn(self.models.nn),
            ModelKind::AugHead => ModelSpec::AugHead(self.models.aug_head),
        }
    }

    /// Union of every experiment's blocks.
    pub fn all_blocks(&self) -> BlockSet {
        BlockSet::new(self.experiments.iter().flat_map(|e| e.blocks.iter()))
    }

    /// Internal consistency, checked before any command does work.
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        if self.targets.is_empty() {
            return Err(CliError::Validation("no prediction targets configured".into()));
        }
        if self.experiments.is_empty() {
            return Err(CliError::Validation("no experiments configured".into()));
        }
        for (i, e) in self.experiments.iter().enumerate() {
            if e.blocks.is_empty() || e.models.is_empty() {
                return Err(CliError::Validation(format!("experiment {i} needs blocks and models")));
            }
            if e.models.contains(&ModelKind::AugHead) && e.blocks != aug_head_blocks() {
                return Err(CliError::Validation(format!(
                    "experiment {i}: aug_head requires exactly the basic, dynamic and transformer blocks"
                )));
            }
        }
        let blocks = self.all_blocks();
        if blocks.contains(Block::Transformer) && self.paths.embeddings.is_none() {
            return Err(CliError::Validation("transformer features need paths.embeddings".into()));
        }
        if blocks.contains(Block::Content) && self.paths.word_vectors.is_none() {
            return Err(CliError::Validation("content features need paths.word_vectors".into()));
        }
        match self.eval.protocol {
            ProtocolKind::Kfold if self.eval.k < 2 => {
                return Err(CliError::Validation("eval.k must be at least 2".into()));
            }
            ProtocolKind::Holdout if !(self.eval.test_fraction > 0.0 && self.eval.test_fraction < 1.0) => {
                return Err(CliError::Validation("eval.test_fraction must be in (0, 1)".into()));
            }
            _ => {}
        }
        if !self.features.utc_offset_hours.is_finite() || self.features.utc_offset_hours.abs() > 14.0 {
            return Err(CliError::Validation("features.utc_offset_hours must be within ±14".into()));
        }
        Ok(())
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.paths.output.join(name)
    }

    /// Hash of the effective configuration.
    pub fn digest(&self) -> String {
        crate::manifest::sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

/// Existing input file, or a validation error naming the config key.
pub fn require(path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    let p = path.clone().ok_or_else(|| CliError::Validation(format!("paths.{key} is not set")))?;
    if !p.is_file() {
        return Err(CliError::Validation(format!("paths.{key}: {} does not exist", p.display())));
    }
    Ok(p)
}
