//! Seeded synthetic cohort with label signal injected into chosen blocks.
//!
//! Each user has one latent trait per target. Survey items load on the
//! traits; depending on [`Signal`], posting behavior and/or the user
//! embedding do as well. Content words are drawn independently of the traits.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use cyberaggr_core::data::{Gender, Post, Profile, UserRecord};
use cyberaggr_core::embedding::EmbeddingTable;
use cyberaggr_core::features::{CONTENT_WIDTH, TRANSFORMER_WIDTH};
use cyberaggr_core::labeling::SurveyResponse;
use cyberaggr_core::time::{Timestamp, SECS_PER_DAY};
use cyberaggr_core::Target;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, ModelKind};
use crate::error::{write, CliError, Result};
use crate::{embedding_file, ingest, resources, survey};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    /// Traits shape posting behavior only.
    Behavior,
    /// Traits shape the user embedding only.
    Transformer,
    Both,
    None,
}

impl Signal {
    fn behavior(self) -> bool {
        matches!(self, Signal::Behavior | Signal::Both)
    }

    fn transformer(self) -> bool {
        matches!(self, Signal::Transformer | Signal::Both)
    }
}

impl FromStr for Signal {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "behavior" => Ok(Signal::Behavior),
            "transformer" => Ok(Signal::Transformer),
            "both" => Ok(Signal::Both),
            "none" => Ok(Signal::None),
            _ => Err(CliError::Validation(format!("unknown signal {s:?}; use behavior, transformer, both or none"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub users: usize,
    pub seed: u64,
    pub signal: Signal,
    pub vocabulary: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { users: 320, seed: 42, signal: Signal::Both, vocabulary: 400 }
    }
}

pub struct SynthData {
    pub users: Vec<UserRecord>,
    pub survey: Vec<SurveyResponse>,
    pub word_vectors: Vec<(String, Vec<f64>)>,
    pub embeddings: EmbeddingTable,
    /// Latent traits per user, indexed by target.
    pub traits: Vec<[f64; 3]>,
}

/// Item mean, trait loading and item noise per target.
const ITEM_MODEL: [(f64, f64, f64); 3] = [(2.4, 1.1, 0.45), (1.7, 0.8, 0.35), (2.0, 1.0, 0.45)];
const EMBEDDING_LOADING: f64 = 2.5;

const HAPPY: [&str; 4] = ["[哈哈]", "[嘻嘻]", "开心", "[鼓掌]"];
const ANGRY: [&str; 4] = ["[怒]", "生气", "[抓狂]", "讨厌"];
const SAD: [&str; 3] = ["[泪]", "难过", "担心"];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn make_vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    // Two-character words from a block of common CJK ideographs.
    let mut words = std::collections::BTreeSet::new();
    while words.len() < size {
        let a = char::from_u32(0x4E00 + rng.random_range(0..2000)).expect("valid ideograph");
        let b = char::from_u32(0x4E00 + rng.random_range(0..2000)).expect("valid ideograph");
        words.insert(format!("{a}{b}"));
    }
    words.into_iter().collect()
}

/// Behavior probabilities for one user; `k` scales how strongly traits act.
struct Tendencies {
    night: f64,
    retweet: f64,
    weekend: f64,
    question: f64,
    exclaim: f64,
    emoticon: f64,
    mention: f64,
    picture: f64,
    hashtag: f64,
}

impl Tendencies {
    fn new(z: [f64; 3], k: f64) -> Self {
        Tendencies {
            night: sigmoid(-1.2 + 1.6 * k * z[0]),
            retweet: sigmoid(-0.8 + 1.6 * k * z[0]),
            weekend: sigmoid(-0.9 + 1.2 * k * z[0]),
            question: sigmoid(-1.2 + 1.6 * k * z[1]),
            exclaim: sigmoid(-1.0 + 1.6 * k * z[1]),
            emoticon: sigmoid(-1.0 + 1.6 * k * z[1]),
            mention: sigmoid(-0.8 + 1.6 * k * z[2]),
            picture: sigmoid(-0.8 + 1.6 * k * z[2]),
            hashtag: sigmoid(-1.4 + 1.2 * k * z[2]),
        }
    }
}

/// `mood` picks happy over angry emoticons; `None` leaves the choice to chance.
fn make_text(rng: &mut ChaCha8Rng, vocab: &[String], t: &Tendencies, mood: Option<f64>) -> String {
    let mut s = String::new();
    if rng.random_bool(t.mention) {
        s.push_str(&format!("@用户{} ", rng.random_range(0..500)));
    }
    if rng.random_bool(t.hashtag) {
        s.push_str(&format!("#{}#", vocab.choose(rng).expect("vocabulary")));
    }
    for _ in 0..rng.random_range(3..9) {
        s.push_str(vocab.choose(rng).expect("vocabulary"));
    }
    if rng.random_bool(t.emoticon) {
        let happy = match mood {
            Some(z) => z >= 0.0,
            None => rng.random_bool(0.5),
        };
        let pool: &[&str] = if happy { &HAPPY } else { &ANGRY };
        s.push_str(pool.choose(rng).expect("emoticons"));
    } else if rng.random_bool(0.1) {
        s.push_str(SAD.choose(rng).expect("emoticons"));
    }
    if rng.random_bool(t.question) {
        s.push('？');
    }
    if rng.random_bool(t.exclaim) {
        s.push('！');
    } else {
        s.push('。');
    }
    if rng.random_bool(0.08) {
        s.push_str(&format!(" http://t.cn/{:06x}", rng.random_range(0..0xFFFFFFu32)));
    }
    s
}

/// 2020-01-01T00:00:00Z.
const START_2020: i64 = 1_577_836_800;
const LOCAL_OFFSET: i64 = 8 * 3600;

fn make_user(rng: &mut ChaCha8Rng, idx: usize, z: [f64; 3], cfg: &SynthConfig, vocab: &[String]) -> UserRecord {
    let k = if cfg.signal.behavior() { 1.0 } else { 0.0 };
    let t = Tendencies::new(z, k);
    let user_id = format!("u{idx:04}");
    let gender = match rng.random_range(0..100) {
        0..=22 => Gender::Male,
        23..=97 => Gender::Female,
        _ => Gender::Unknown,
    };
    let description = if rng.random_bool(0.7) {
        (0..rng.random_range(2..6)).map(|_| vocab.choose(rng).expect("vocabulary").as_str()).collect()
    } else {
        String::new()
    };
    let followers = (rng.sample::<f64, _>(StandardNormal) * 1.2 + 5.0).exp().round() as u64;
    let followees = (rng.sample::<f64, _>(StandardNormal) * 0.8 + 5.0).exp().round() as u64;
    let profile = Profile {
        user_id: user_id.clone(),
        gender,
        verified: rng.random_bool(0.05),
        follower_count: followers,
        followee_count: followees,
        description,
    };

    // Local calendar days; the span always crosses a month boundary.
    let first_day = START_2020 / SECS_PER_DAY + rng.random_range(0..150);
    let span_days = rng.random_range(62..180);
    let n_posts = rng.random_range(25..80);
    let mut posts = Vec::with_capacity(n_posts);
    for j in 0..n_posts {
        // The first two posts pin both ends of the span.
        let mut day = match j {
            0 => first_day,
            1 => first_day + span_days,
            _ => first_day + rng.random_range(0..=span_days),
        };
        // Monday is weekday 0 on a local-day count offset by 3.
        let weekend = rng.random_bool(t.weekend);
        let wd = (day + 3).rem_euclid(7);
        if j > 1 && weekend && wd < 5 {
            day += 5 - wd;
        } else if j > 1 && !weekend && wd >= 5 {
            day -= wd - 4;
        }
        let hour = if rng.random_bool(t.night) { rng.random_range(0..6) } else { rng.random_range(7..24) };
        let local = day * SECS_PER_DAY + hour * 3600 + rng.random_range(0..3600);
        let ts = Timestamp::from_unix(local - LOCAL_OFFSET);
        let text = make_text(rng, vocab, &t, (k > 0.0).then_some(z[1]));
        let is_retweet = rng.random_bool(t.retweet);
        let text = if is_retweet { format!("//转发 {text}") } else { text };
        posts.push(Post::from_text(format!("{user_id}-{j:03}"), ts, text, rng.random_bool(t.picture), is_retweet));
    }
    UserRecord::new(profile, posts).0
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.users < 6 {
        return Err(CliError::Validation("synthetic cohort needs at least 6 users".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab = make_vocabulary(&mut rng, cfg.vocabulary.max(10));
    let unit = Normal::new(0.0, 1.0).expect("valid normal");

    let word_vectors: Vec<(String, Vec<f64>)> = vocab
        .iter()
        .map(|w| (w.clone(), (0..CONTENT_WIDTH).map(|_| round6(unit.sample(&mut rng) * 0.3)).collect()))
        .collect();

    // Orthonormal-ish trait directions in embedding space.
    let scale = 1.0 / (TRANSFORMER_WIDTH as f64).sqrt();
    let directions: Vec<Vec<f64>> =
        (0..3).map(|_| (0..TRANSFORMER_WIDTH).map(|_| unit.sample(&mut rng) * scale).collect()).collect();

    let traits: Vec<[f64; 3]> =
        (0..cfg.users).map(|_| [unit.sample(&mut rng), unit.sample(&mut rng), unit.sample(&mut rng)]).collect();

    let mut users = Vec::with_capacity(cfg.users);
    let mut survey = Vec::with_capacity(cfg.users);
    let mut embeddings = EmbeddingTable::new(TRANSFORMER_WIDTH, format!("synthetic-{:?}-seed{}", cfg.signal, cfg.seed).to_lowercase());
    for (i, z) in traits.iter().enumerate() {
        let user = make_user(&mut rng, i + 1, *z, cfg, &vocab);
        let mut items = Target::ALL.map(|t| {
            let (mean, loading, noise) = ITEM_MODEL[t.index()];
            (0..t.item_count())
                .map(|_| (mean + loading * z[t.index()] + noise * unit.sample(&mut rng)).round().clamp(1.0, 7.0) as u8)
                .collect::<Vec<u8>>()
        });
        survey.push(SurveyResponse {
            user_id: user.user_id().into(),
            social_exclusion: std::mem::take(&mut items[0]),
            malicious_humour: std::mem::take(&mut items[1]),
            guilt_induction: std::mem::take(&mut items[2]),
        });
        let loading = if cfg.signal.transformer() { EMBEDDING_LOADING } else { 0.0 };
        let e: Vec<f64> = (0..TRANSFORMER_WIDTH)
            .map(|d| {
                let signal: f64 = (0..3).map(|t| z[t] * directions[t][d]).sum::<f64>() * loading;
                round6(signal + unit.sample(&mut rng) * scale)
            })
            .collect();
        embeddings.insert(user.user_id(), e)?;
        users.push(user);
    }
    Ok(SynthData { users, survey, word_vectors, embeddings, traits })
}

/// Run configuration pointing at the files written by [`write_dataset`].
pub fn run_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.paths.posts = Some("posts.jsonl".into());
    cfg.paths.profiles = Some("profiles.jsonl".into());
    cfg.paths.survey = Some("survey.csv".into());
    cfg.paths.word_vectors = Some("word_vectors.txt".into());
    cfg.paths.lexicon = Some("lexicon.csv".into());
    cfg.paths.embeddings = Some("embeddings.tsv".into());
    cfg.paths.output = "out".into();
    debug_assert!(cfg.experiments.iter().any(|e| e.models.contains(&ModelKind::AugHead)));
    cfg
}

/// Writes the cohort as pipeline input files plus `config.json`; returns
/// the paths written.
pub fn write_dataset(data: &SynthData, dir: &Path) -> Result<Vec<PathBuf>> {
    let (posts, profiles) = ingest::to_input_format(&data.users);
    let files = [
        ("posts.jsonl", posts),
        ("profiles.jsonl", profiles),
        ("survey.csv", survey::write_survey(&data.survey)?),
        (
            "word_vectors.txt",
            resources::format_word_vectors(
                CONTENT_WIDTH,
                data.word_vectors.iter().map(|(w, v)| (w.as_str(), v.as_slice())),
            ),
        ),
        ("lexicon.csv", resources::DEFAULT_LEXICON.to_string()),
        ("embeddings.tsv", embedding_file::format_embeddings(&data.embeddings)),
        ("config.json", serde_json::to_string_pretty(&run_config())? + "\n"),
    ];
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cyberaggr_core::data::{apply_activity_filter, ActivityFilterPolicy};

    #[test]
    fn every_user_passes_the_filter() {
        let data = generate(&SynthConfig { users: 40, ..Default::default() }).unwrap();
        let out = apply_activity_filter(data.users.clone(), &ActivityFilterPolicy::default());
        assert!(out.dropped.is_empty(), "{:?}", out.dropped);
        assert_eq!(data.survey.len(), 40);
        for r in &data.survey {
            r.validate().unwrap();
        }
    }

    #[test]
    fn seeded_generation_repeats() {
        let cfg = SynthConfig { users: 10, ..Default::default() };
        let (a, b) = (generate(&cfg).unwrap(), generate(&cfg).unwrap());
        assert_eq!(a.users, b.users);
        assert_eq!(a.embeddings, b.embeddings);
        assert_ne!(generate(&SynthConfig { seed: 7, ..cfg }).unwrap().users, a.users);
    }
}
