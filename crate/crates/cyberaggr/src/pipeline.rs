//! The pipeline commands. Each reads its stage inputs, writes its outputs
//! and a manifest, and is a no-op when the outputs are already current.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cyberaggr_core::cv::{pool, run_fold, permutation_baseline, EvalContext, FoldOutcome};
use cyberaggr_core::data::{apply_activity_filter, dataset_summary, DropReason, Summary};
use cyberaggr_core::embedding::join_embeddings;
use cyberaggr_core::features::{Block, BlockSet, ExtractorConfig, FeatureExtractor, FeatureVector, OovStats};
use cyberaggr_core::labeling::{label_cohort, score_survey, LabelSet};
use cyberaggr_core::models::{fit, train_aug_head, ModelSpec};
use cyberaggr_core::{Level, Target};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{require, ModelKind, RunConfig};
use crate::error::{write, CliError, Result};
use crate::feature_io::{self, FeatureSchema};
use crate::ingest::{self, IngestReport};
use crate::manifest::{Plan, Stage};
use crate::report::{self, PermutationSummary, ReportTable};
use crate::synth::{self, SynthConfig};
use crate::{embedding_file, model_file, resources, survey};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn text(self) -> bool {
        matches!(self, Format::Text | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Options shared by every command.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub force: bool,
    pub format: Format,
}

/// What a command did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Wrote(Vec<PathBuf>),
    UpToDate(PathBuf),
}

fn stage_input(path: PathBuf, producer: &str) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Data(format!("{} not found; run `cyberaggr {producer}` first", path.display())))
    }
}

fn begin(cmd: &str, primary: PathBuf, cfg: &RunConfig, inputs: &[&Path], opts: &Options) -> Result<Option<Stage>> {
    let stage = Stage::new(cmd, primary, cfg.digest(), inputs)?;
    match stage.plan(opts.force)? {
        Plan::Run => Ok(Some(stage)),
        Plan::UpToDate => {
            info!("{} is up to date", stage.primary.display());
            Ok(None)
        }
    }
}

fn finish(stage: Stage, outputs: Vec<PathBuf>) -> Result<Outcome> {
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    stage.finish(&refs)?;
    Ok(Outcome::Wrote(outputs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub ingest: IngestReport,
    pub filter_dropped: Vec<(String, DropReason)>,
    pub filter_tally: BTreeMap<String, usize>,
    pub kept: Summary,
}

pub fn cmd_ingest(cfg: &RunConfig, opts: &Options) -> Result<Outcome> {
    cfg.filter.validate()?;
    let posts = require(&cfg.paths.posts, "posts")?;
    let profiles = require(&cfg.paths.profiles, "profiles")?;
    let out = cfg.output("users.jsonl");
    let Some(stage) = begin("ingest", out.clone(), cfg, &[&posts, &profiles], opts)? else {
        return Ok(Outcome::UpToDate(out));
    };
    let (users, report) = ingest::ingest_files(&posts, &profiles)?;
    for w in &report.warnings {
        warn!("{w}");
    }
    let filtered = apply_activity_filter(users, &cfg.filter);
    info!("ingested {} users, {} kept by the activity filter", report.users, filtered.kept.len());
    let summary = IngestSummary {
        filter_tally: ingest::drop_tally(&filtered.dropped),
        filter_dropped: filtered.dropped,
        kept: dataset_summary(&filtered.kept),
        ingest: report,
    };
    write(&out, ingest::write_users(&filtered.kept)?)?;
    let text_path = cfg.output("ingest_report.txt");
    let json_path = cfg.output("ingest_report.json");
    let mut text = summary.ingest.render_text();
    text.push_str(&format!("kept after activity filter: {}\n", summary.kept.users));
    for (reason, n) in &summary.filter_tally {
        text.push_str(&format!("  dropped ({reason}): {n}\n"));
    }
    write(&text_path, text)?;
    write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    finish(stage, vec![out, text_path, json_path])
}

pub fn cmd_label(cfg: &RunConfig, opts: &Options) -> Result<Outcome> {
    let survey_path = require(&cfg.paths.survey, "survey")?;
    let users_path = stage_input(cfg.output("users.jsonl"), "ingest")?;
    let out = cfg.output("labels.csv");
    let Some(stage) = begin("label", out.clone(), cfg, &[&survey_path, &users_path], opts)? else {
        return Ok(Outcome::UpToDate(out));
    };
    let users = ingest::read_users(&users_path)?;
    let known: BTreeMap<&str, ()> = users.iter().map(|u| (u.user_id(), ())).collect();
    let responses = survey::read_survey(&survey_path)?;
    let mut seen = BTreeMap::new();
    let mut scored = Vec::new();
    let mut unmatched = 0;
    for r in &responses {
        if seen.insert(r.user_id.clone(), ()).is_some() {
            return Err(CliError::Data(format!("survey lists user {} twice", r.user_id)));
        }
        if !known.contains_key(r.user_id.as_str()) {
            unmatched += 1;
            continue;
        }
        scored.push((r.user_id.clone(), score_survey(r)?));
    }
    if unmatched > 0 {
        warn!("{unmatched} survey responses have no active user and were skipped");
    }
    let cohort = label_cohort(&scored)?;
    for t in Target::ALL {
        let c = cohort.counts[t.index()];
        info!("{t}: high {} / neutral {} / low {}", c.high, c.neutral, c.low);
    }
    let thresholds = cfg.output("thresholds.json");
    write(&out, survey::write_labels(&cohort.labels)?)?;
    write(&thresholds, serde_json::to_string_pretty(&survey::ThresholdsFile::from_cohort(&cohort))? + "\n")?;
    finish(stage, vec![out, thresholds])
}

pub fn cmd_featurize(cfg: &RunConfig, opts: &Options) -> Result<Outcome> {
    cfg.validate()?;
    let blocks = cfg.all_blocks();
    let users_path = stage_input(cfg.output("users.jsonl"), "ingest")?;
    let mut inputs = vec![users_path.clone()];
    if blocks.contains(Block::Content) {
        inputs.push(require(&cfg.paths.word_vectors, "word_vectors")?);
    }
    if blocks.contains(Block::Emotion) {
        if let Some(p) = &cfg.paths.lexicon {
            inputs.push(require(&Some(p.clone()), "lexicon")?);
        }
    }
    if blocks.contains(Block::Transformer) {
        inputs.push(require(&cfg.paths.embeddings, "embeddings")?);
    }
    let out = cfg.output("features.csv");
    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let Some(stage) = begin("featurize", out.clone(), cfg, &refs, opts)? else {
        return Ok(Outcome::UpToDate(out));
    };
    let users = ingest::read_users(&users_path)?;
    let word_vectors = match blocks.contains(Block::Content) {
        true => {
            let (t, stats) = resources::load_word_vectors(cfg.paths.word_vectors.as_deref().expect("validated"))?;
            if stats.duplicates > 0 {
                warn!("{} repeated tokens in the word-vector file; first vectors kept", stats.duplicates);
            }
            Some(t)
        }
        false => None,
    };
    let lexicon = match blocks.contains(Block::Emotion) {
        true => Some(resources::load_lexicon(cfg.paths.lexicon.as_deref())?),
        false => None,
    };
    let embeddings = match blocks.contains(Block::Transformer) {
        true => Some(embedding_file::load_embeddings(cfg.paths.embeddings.as_deref().expect("validated"))?),
        false => None,
    };
    let extractor = FeatureExtractor {
        config: ExtractorConfig { clock: cfg.features.clock() },
        word_vectors: word_vectors.as_ref(),
        lexicon: lexicon.as_ref(),
        embeddings: embeddings.as_ref(),
    };
    extractor.check(&blocks)?;
    let mut schema = FeatureSchema::new(&blocks, users.len(), cfg.features.clock().utc_offset_secs);
    if let Some(table) = &embeddings {
        let coverage = join_embeddings(&users, table);
        if !coverage.missing.is_empty() {
            return Err(cyberaggr_core::Error::MissingEmbedding(coverage.missing).into());
        }
        if !coverage.unused.is_empty() {
            info!("{} embeddings match no active user", coverage.unused.len());
        }
        schema.embedding_coverage = Some(coverage);
        schema.embedding_provenance = Some(table.provenance().to_string());
    }
    let extracted = users
        .par_iter()
        .map(|u| extractor.assemble(u, &blocks))
        .collect::<cyberaggr_core::Result<Vec<_>>>()?;
    if blocks.contains(Block::Content) {
        let mut total = OovStats::default();
        for e in extracted.iter().filter_map(|e| e.oov) {
            total.documents += e.documents;
            total.oov_documents += e.oov_documents;
            total.tokens += e.tokens;
            total.oov_tokens += e.oov_tokens;
        }
        schema.content_oov = Some(total);
    }
    let vectors: Vec<FeatureVector> = extracted.into_iter().map(|e| e.features).collect();
    let schema_path = feature_io::schema_path(&out);
    write(&out, feature_io::format_features(&blocks, &vectors)?)?;
    write(&schema_path, serde_json::to_string_pretty(&schema)? + "\n")?;
    info!("wrote {} users x {} features", vectors.len(), blocks.width());
    finish(stage, vec![out, schema_path])
}

/// Rows and labels of users present in both files, in feature-file order.
pub fn design(
    vectors: &[FeatureVector],
    labels: &BTreeMap<String, LabelSet>,
    blocks: &BlockSet,
    target: Target,
) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<Level>)> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for v in vectors {
        if let Some(l) = labels.get(&v.user_id) {
            ids.push(v.user_id.clone());
            rows.push(v.select(blocks)?);
            y.push(l.get(target));
        }
    }
    if rows.is_empty() {
        return Err(CliError::Data("no user has both features and labels".into()));
    }
    Ok((ids, rows, y))
}

struct Inputs {
    features_path: PathBuf,
    labels_path: PathBuf,
    vectors: Vec<FeatureVector>,
    labels: BTreeMap<String, LabelSet>,
    provenance: Option<String>,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let features_path = stage_input(cfg.output("features.csv"), "featurize")?;
    let labels_path = stage_input(cfg.output("labels.csv"), "label")?;
    let (available, vectors) = feature_io::read_features(&features_path)?;
    let schema: Option<FeatureSchema> = std::fs::read_to_string(feature_io::schema_path(&features_path))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok());
    let missing: Vec<String> = cfg.all_blocks().iter().filter(|b| !available.contains(*b)).map(|b| b.to_string()).collect();
    if !missing.is_empty() {
        return Err(CliError::Validation(format!(
            "features.csv lacks blocks {}; rerun `cyberaggr featurize --force`",
            missing.join(", ")
        )));
    }
    Ok(Inputs {
        labels: survey::read_labels(&labels_path)?,
        features_path,
        labels_path,
        vectors,
        provenance: schema.and_then(|s| s.embedding_provenance),
    })
}

/// One evaluated cell of the results table.
#[derive(Clone, Debug)]
pub struct Job {
    pub target: Target,
    pub blocks: BlockSet,
    pub kind: ModelKind,
}

pub fn jobs(cfg: &RunConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for &target in &cfg.targets {
        for e in &cfg.experiments {
            for &kind in &e.models {
                out.push(Job { target, blocks: e.blocks.clone(), kind });
            }
        }
    }
    out
}

/// Cross-validates every job; folds of all jobs run in parallel.
pub fn evaluate(cfg: &RunConfig, vectors: &[FeatureVector], labels: &BTreeMap<String, LabelSet>) -> Result<ReportTable> {
    let protocol = cfg.eval.protocol();
    let jobs = jobs(cfg);
    let mut prepared = Vec::new();
    for job in &jobs {
        let (_, rows, y) = design(vectors, labels, &job.blocks, job.target)?;
        let splits = protocol.split(&y)?;
        prepared.push((rows, y, splits, cfg.spec(job.kind)));
    }
    let tasks: Vec<(usize, usize)> =
        prepared.iter().enumerate().flat_map(|(j, p)| (0..p.2.len()).map(move |f| (j, f))).collect();
    let outcomes: Vec<FoldOutcome> = tasks
        .par_iter()
        .map(|&(j, f)| {
            let (rows, y, splits, spec) = &prepared[j];
            run_fold(rows, y, spec, &splits[f], f)
        })
        .collect::<cyberaggr_core::Result<_>>()?;
    let mut reports = Vec::new();
    let mut at = 0;
    for (job, (_, y, splits, spec)) in jobs.iter().zip(&prepared) {
        let ctx = EvalContext { target: job.target, features: job.blocks.clone() };
        let folds = &outcomes[at..at + splits.len()];
        at += splits.len();
        reports.push(pool(y, folds, &ctx, spec, protocol)?.report);
    }
    let mut table = report::build(reports);
    if cfg.eval.permutation_shuffles > 0 {
        let shuffles = cfg.eval.permutation_shuffles;
        table.permutation = prepared
            .par_iter()
            .enumerate()
            .map(|(row, (rows, y, _, spec))| {
                let baseline = permutation_baseline(rows, y, spec, protocol, shuffles, cfg.eval.seed)?;
                Ok(PermutationSummary {
                    row,
                    shuffles,
                    mean_acc: baseline.mean_acc(),
                    mean_macro_f1: baseline.mean_macro_f1(),
                    mean_auc: baseline.mean_auc(),
                    baseline,
                })
            })
            .collect::<cyberaggr_core::Result<_>>()?;
    }
    Ok(table)
}

pub fn cmd_eval(cfg: &RunConfig, opts: &Options) -> Result<(Outcome, Option<ReportTable>)> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let text_path = cfg.output("report.txt");
    let json_path = cfg.output("report.json");
    let primary = if opts.format.json() { json_path.clone() } else { text_path.clone() };
    let Some(stage) = begin("eval", primary.clone(), cfg, &[&inputs.features_path, &inputs.labels_path], opts)? else {
        return Ok((Outcome::UpToDate(primary), None));
    };
    let table = evaluate(cfg, &inputs.vectors, &inputs.labels)?;
    let mut outputs = Vec::new();
    if opts.format.text() {
        write(&text_path, report::render_text(&table))?;
        outputs.push(text_path);
    }
    if opts.format.json() {
        write(&json_path, serde_json::to_string_pretty(&table)? + "\n")?;
        outputs.push(json_path);
    }
    Ok((finish(stage, outputs)?, Some(table)))
}

fn block_slug(blocks: &BlockSet) -> String {
    blocks.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("-")
}

pub fn model_file_name(job: &Job) -> String {
    let kind = serde_json::to_value(job.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    format!("{}__{}__{kind}.aggrmdl", job.target, block_slug(&job.blocks))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelIndexEntry {
    pub file: String,
    pub target: Target,
    pub blocks: BlockSet,
    pub model: String,
    pub training_rows: usize,
}

pub fn cmd_train(cfg: &RunConfig, opts: &Options) -> Result<Outcome> {
    cfg.validate()?;
    let inputs = load_inputs(cfg)?;
    let dir = cfg.output("models");
    let index_path = dir.join("index.json");
    let Some(stage) = begin("train", index_path.clone(), cfg, &[&inputs.features_path, &inputs.labels_path], opts)? else {
        return Ok(Outcome::UpToDate(index_path));
    };
    let jobs = jobs(cfg);
    let trained = jobs
        .par_iter()
        .map(|job| -> Result<(ModelIndexEntry, Vec<u8>)> {
            let spec = cfg.spec(job.kind);
            let (ids, rows, y) = design(&inputs.vectors, &inputs.labels, &job.blocks, job.target)?;
            let fitted = match &spec {
                ModelSpec::AugHead(t) => {
                    let by_id = feature_io::index(inputs.vectors.clone());
                    let fvs: Vec<FeatureVector> = ids.iter().map(|i| by_id[i].clone()).collect();
                    train_aug_head(&fvs, &y, t, inputs.provenance.as_deref().unwrap_or(""))?
                }
                _ => fit(&spec, &rows, &y)?,
            };
            let info = model_file::SaveInfo { target: job.target, blocks: &job.blocks, spec: &spec, training_rows: rows.len() };
            let entry = ModelIndexEntry {
                file: model_file_name(job),
                target: job.target,
                blocks: job.blocks.clone(),
                model: spec.tag().into(),
                training_rows: rows.len(),
            };
            Ok((entry, model_file::encode(&fitted, info)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut outputs = Vec::new();
    let mut index = Vec::new();
    for (entry, bytes) in trained {
        let path = dir.join(&entry.file);
        write(&path, bytes)?;
        info!("trained {}", path.display());
        outputs.push(path);
        index.push(entry);
    }
    write(&index_path, serde_json::to_string_pretty(&index)? + "\n")?;
    outputs.push(index_path);
    finish(stage, outputs)
}

pub fn cmd_predict(cfg: &RunConfig, opts: &Options, model: &Path, features: Option<&Path>, out: Option<&Path>) -> Result<Outcome> {
    if !model.is_file() {
        return Err(CliError::Data(format!("{} not found; run `cyberaggr train` first", model.display())));
    }
    let features_path = match features {
        Some(p) => p.to_path_buf(),
        None => stage_input(cfg.output("features.csv"), "featurize")?,
    };
    let stem = model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output("predictions").join(format!("{stem}.csv")));
    let Some(stage) = begin("predict", out.clone(), cfg, &[model, &features_path], opts)? else {
        return Ok(Outcome::UpToDate(out));
    };
    let (meta, classifier) = model_file::load(model)?;
    let (available, vectors) = feature_io::read_features(&features_path)?;
    if meta.blocks.iter().any(|b| !available.contains(b)) {
        return Err(CliError::Validation(format!(
            "model needs blocks {}, {} has {}",
            meta.blocks.label(),
            features_path.display(),
            available.label()
        )));
    }
    let rows = vectors.iter().map(|v| v.select(&meta.blocks)).collect::<cyberaggr_core::Result<Vec<_>>>()?;
    let proba = classifier.predict_proba(&rows)?;
    let labels = classifier.predict(&rows)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["user_id", "label", "p_low", "p_neutral", "p_high"])?;
    for ((v, p), l) in vectors.iter().zip(&proba).zip(&labels) {
        w.write_record([v.user_id.clone(), l.to_string(), p[0].to_string(), p[1].to_string(), p[2].to_string()])?;
    }
    write(&out, w.into_inner().map_err(|e| CliError::Data(e.to_string()))?)?;
    finish(stage, vec![out])
}

pub fn cmd_synth(dir: &Path, cfg: &SynthConfig, opts: &Options) -> Result<Outcome> {
    let primary = dir.join("config.json");
    let digest = crate::manifest::sha256_hex(serde_json::to_string(cfg)?.as_bytes());
    let stage = Stage::new("synth", primary.clone(), digest, &[])?;
    if stage.plan(opts.force)? == Plan::UpToDate {
        return Ok(Outcome::UpToDate(primary));
    }
    let data = synth::generate(cfg)?;
    let written = synth::write_dataset(&data, dir)?;
    info!("wrote a {}-user synthetic cohort to {}", data.users.len(), dir.display());
    finish(stage, written)
}

/// `ingest`, `label`, `featurize` and `eval` in order.
pub fn run_all(cfg: &RunConfig, opts: &Options) -> Result<Option<ReportTable>> {
    run_all_with(cfg, opts, |_| {})
}

/// [`run_all`], handing each stage's outcome to `on_stage` as it finishes.
pub fn run_all_with(cfg: &RunConfig, opts: &Options, mut on_stage: impl FnMut(&Outcome)) -> Result<Option<ReportTable>> {
    on_stage(&cmd_ingest(cfg, opts)?);
    on_stage(&cmd_label(cfg, opts)?);
    on_stage(&cmd_featurize(cfg, opts)?);
    let (outcome, table) = cmd_eval(cfg, opts)?;
    on_stage(&outcome);
    Ok(table)
}
