//! Per-user feature blocks and their canonical assembly.
//!
//! Blocks are always concatenated in the order basic, dynamic, content,
//! emotion, transformer, whatever order they were requested in. The basic
//! and dynamic registries are versioned by [`REGISTRY_VERSION`]; any change
//! to their layout must bump it.

mod basic;
mod content;
mod dynamic;
mod emotion;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::data::UserRecord;
use crate::embedding::EmbeddingTable;
use crate::time::LocalClock;
use crate::{Error, Result};

pub use basic::{extract_basic, BASIC_NAMES};
pub use content::{extract_content, max_match, OovStats, WordVectorTable, MAX_TOKEN_CHARS};
pub use dynamic::{extract_dynamic, dynamic_names, INTERACTIONS};
pub use emotion::{classify_text, extract_emotion, Emotion, EmotionLexicon};

pub const REGISTRY_VERSION: &str = "aggr-features/1";

pub const BASIC_WIDTH: usize = 41;
pub const DYNAMIC_WIDTH: usize = 93;
pub const CONTENT_WIDTH: usize = 300;
pub const EMOTION_WIDTH: usize = 5;
pub const TRANSFORMER_WIDTH: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Basic,
    Dynamic,
    Content,
    Emotion,
    Transformer,
}

impl Block {
    pub const ALL: [Block; 5] = [Block::Basic, Block::Dynamic, Block::Content, Block::Emotion, Block::Transformer];

    pub const fn width(self) -> usize {
        match self {
            Block::Basic => BASIC_WIDTH,
            Block::Dynamic => DYNAMIC_WIDTH,
            Block::Content => CONTENT_WIDTH,
            Block::Emotion => EMOTION_WIDTH,
            Block::Transformer => TRANSFORMER_WIDTH,
        }
    }

    pub const fn display_name(self) -> &'static str {
        match self {
            Block::Basic => "Basic",
            Block::Dynamic => "Dynamic",
            Block::Content => "Content",
            Block::Emotion => "Emotion",
            Block::Transformer => "Transformer",
        }
    }

    /// Column names, in order, as written to feature files.
    pub fn column_names(self) -> Vec<String> {
        match self {
            Block::Basic => (0..BASIC_WIDTH).map(|i| format!("basic_{i:02}")).collect(),
            Block::Dynamic => dynamic_names(),
            Block::Content => (0..CONTENT_WIDTH).map(|i| format!("content_{i:03}")).collect(),
            Block::Emotion => Emotion::ALL.iter().map(|e| format!("emo_{}", e.name())).collect(),
            Block::Transformer => (0..TRANSFORMER_WIDTH).map(|i| format!("tr_{i:03}")).collect(),
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Block::Basic => "basic",
            Block::Dynamic => "dynamic",
            Block::Content => "content",
            Block::Emotion => "emotion",
            Block::Transformer => "transformer",
        })
    }
}

impl core::str::FromStr for Block {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Block::ALL
            .into_iter()
            .find(|b| format!("{b}") == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown feature block {s:?}")))
    }
}

/// Canonically ordered, duplicate-free set of blocks.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<Block>", into = "Vec<Block>")]
pub struct BlockSet(BTreeSet<Block>);

impl BlockSet {
    pub fn new(blocks: impl IntoIterator<Item = Block>) -> Self {
        BlockSet(blocks.into_iter().collect())
    }

    pub fn contains(&self, b: Block) -> bool {
        self.0.contains(&b)
    }

    pub fn iter(&self) -> impl Iterator<Item = Block> + '_ {
        self.0.iter().copied()
    }

    pub fn width(&self) -> usize {
        self.iter().map(Block::width).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// "Basic + Dynamic + Content" style label.
    pub fn label(&self) -> String {
        let names: Vec<&str> = self.iter().map(Block::display_name).collect();
        names.join(" + ")
    }

    pub fn column_names(&self) -> Vec<String> {
        self.iter().flat_map(Block::column_names).collect()
    }
}

impl From<Vec<Block>> for BlockSet {
    fn from(v: Vec<Block>) -> Self {
        BlockSet::new(v)
    }
}

impl From<BlockSet> for Vec<Block> {
    fn from(s: BlockSet) -> Self {
        s.0.into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub user_id: String,
    /// Present blocks in canonical order.
    pub blocks: Vec<(Block, Vec<f64>)>,
}

impl FeatureVector {
    pub fn new(user_id: impl Into<String>) -> Self {
        FeatureVector { user_id: user_id.into(), blocks: Vec::new() }
    }

    /// Inserts a block at its canonical position, replacing any previous value.
    pub fn insert(&mut self, block: Block, values: Vec<f64>) -> Result<()> {
        if values.len() != block.width() {
            return Err(Error::WidthMismatch { expected: block.width(), got: values.len() });
        }
        match self.blocks.binary_search_by_key(&block, |(b, _)| *b) {
            Ok(i) => self.blocks[i].1 = values,
            Err(i) => self.blocks.insert(i, (block, values)),
        }
        Ok(())
    }

    pub fn block(&self, block: Block) -> Option<&[f64]> {
        self.blocks.iter().find(|(b, _)| *b == block).map(|(_, v)| v.as_slice())
    }

    pub fn block_set(&self) -> BlockSet {
        BlockSet::new(self.blocks.iter().map(|(b, _)| *b))
    }

    /// Concatenation of every present block.
    pub fn concat(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|(_, v)| v.iter().copied()).collect()
    }

    /// Concatenation of `blocks`, which must all be present.
    pub fn select(&self, blocks: &BlockSet) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(blocks.width());
        for b in blocks.iter() {
            let values = self
                .block(b)
                .ok_or_else(|| Error::Config(format!("user {} has no {b} block", self.user_id)))?;
            out.extend_from_slice(values);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    pub clock: LocalClock,
}

/// Resources needed by the block extractors. Each is only required when the
/// corresponding block is requested.
#[derive(Clone, Copy, Debug, Default)]
pub struct FeatureExtractor<'a> {
    pub config: ExtractorConfig,
    pub word_vectors: Option<&'a WordVectorTable>,
    pub lexicon: Option<&'a EmotionLexicon>,
    pub embeddings: Option<&'a EmbeddingTable>,
}

/// One user's features plus the content-block vocabulary coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct Extracted {
    pub features: FeatureVector,
    pub oov: Option<OovStats>,
}

impl<'a> FeatureExtractor<'a> {
    /// Fails before any work if a requested block lacks its resource.
    pub fn check(&self, blocks: &BlockSet) -> Result<()> {
        if blocks.contains(Block::Content) {
            match self.word_vectors {
                None => return Err(Error::Config("content block requires a word-vector table".into())),
                Some(t) if t.is_empty() => return Err(Error::Config("word-vector table is empty".into())),
                Some(t) if t.dimension() != CONTENT_WIDTH => {
                    return Err(Error::Config(format!(
                        "content block requires {CONTENT_WIDTH}-dim word vectors, table has {}",
                        t.dimension()
                    )))
                }
                Some(_) => {}
            }
        }
        if blocks.contains(Block::Emotion) && self.lexicon.is_none() {
            return Err(Error::Config("emotion block requires a lexicon".into()));
        }
        if blocks.contains(Block::Transformer) {
            match self.embeddings {
                None => return Err(Error::Config("transformer block requires an embedding table".into())),
                Some(t) if t.dimension() != TRANSFORMER_WIDTH => {
                    return Err(Error::Config(format!(
                        "transformer block requires {TRANSFORMER_WIDTH}-dim embeddings, table has {}",
                        t.dimension()
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn assemble(&self, user: &UserRecord, blocks: &BlockSet) -> Result<Extracted> {
        self.check(blocks)?;
        let mut fv = FeatureVector::new(user.user_id());
        let mut oov = None;
        for block in blocks.iter() {
            let values = match block {
                Block::Basic => extract_basic(user, self.config.clock).to_vec(),
                Block::Dynamic => extract_dynamic(user, self.config.clock).to_vec(),
                Block::Content => {
                    let (v, stats) = extract_content(user, self.word_vectors.expect("checked"))?;
                    oov = Some(stats);
                    v
                }
                Block::Emotion => extract_emotion(user, self.lexicon.expect("checked")).to_vec(),
                Block::Transformer => self
                    .embeddings
                    .expect("checked")
                    .get(user.user_id())
                    .ok_or_else(|| Error::MissingEmbedding(alloc::vec![user.user_id().into()]))?
                    .to_vec(),
            };
            fv.insert(block, values)?;
        }
        Ok(Extracted { features: fv, oov })
    }

    /// Assembles every user, collecting all users without an embedding into
    /// a single error.
    pub fn assemble_all(&self, users: &[UserRecord], blocks: &BlockSet) -> Result<Vec<Extracted>> {
        self.check(blocks)?;
        if let (true, Some(table)) = (blocks.contains(Block::Transformer), self.embeddings) {
            let missing: Vec<String> =
                users.iter().filter(|u| table.get(u.user_id()).is_none()).map(|u| u.user_id().into()).collect();
            if !missing.is_empty() {
                return Err(Error::MissingEmbedding(missing));
            }
        }
        users.iter().map(|u| self.assemble(u, blocks)).collect()
    }
}

/// Shannon entropy (natural log) of a histogram; 0 for an empty one.
pub(crate) fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * crate::math::ln(p)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Gender, Post, Profile};
    use crate::time::Timestamp;
    use alloc::vec;

    fn user(id: &str) -> UserRecord {
        let profile = Profile {
            user_id: id.into(),
            gender: Gender::Female,
            verified: false,
            follower_count: 3,
            followee_count: 4,
            description: String::new(),
        };
        let posts = vec![Post::from_text("p", Timestamp::from_unix(1_583_144_220), "你好", false, false)];
        UserRecord::new(profile, posts).0
    }

    #[test]
    fn block_widths() {
        let bd = BlockSet::new([Block::Dynamic, Block::Basic]);
        assert_eq!(bd.width(), 134);
        assert_eq!(bd.label(), "Basic + Dynamic");
        assert_eq!(BlockSet::new([Block::Basic, Block::Dynamic, Block::Content]).width(), 434);
        assert_eq!(BlockSet::new([Block::Transformer, Block::Basic, Block::Dynamic]).width(), 646);
        for b in Block::ALL {
            assert_eq!(b.column_names().len(), b.width());
        }
    }

    #[test]
    fn assemble_basic_dynamic() {
        let ex = FeatureExtractor::default();
        let out = ex.assemble(&user("u"), &BlockSet::new([Block::Dynamic, Block::Basic])).unwrap();
        assert_eq!(out.features.concat().len(), 134);
        assert_eq!(out.features.blocks[0].0, Block::Basic);
    }

    #[test]
    fn missing_resources_are_config_errors() {
        let ex = FeatureExtractor::default();
        for b in [Block::Content, Block::Emotion, Block::Transformer] {
            assert!(matches!(ex.assemble(&user("u"), &BlockSet::new([b])), Err(Error::Config(_))));
        }
    }

    #[test]
    fn missing_embedding_lists_users() {
        let mut table = EmbeddingTable::new(TRANSFORMER_WIDTH, "test");
        table.insert("a", vec![0.5; TRANSFORMER_WIDTH]).unwrap();
        let ex = FeatureExtractor { embeddings: Some(&table), ..Default::default() };
        let blocks = BlockSet::new([Block::Basic, Block::Dynamic, Block::Transformer]);
        let ok = ex.assemble(&user("a"), &blocks).unwrap();
        assert_eq!(ok.features.concat().len(), 646);
        match ex.assemble_all(&[user("a"), user("b"), user("c")], &blocks) {
            Err(Error::MissingEmbedding(ids)) => assert_eq!(ids, vec!["b", "c"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn insert_rejects_wrong_width() {
        let mut fv = FeatureVector::new("u");
        assert!(matches!(fv.insert(Block::Emotion, vec![0.0; 4]), Err(Error::WidthMismatch { .. })));
    }

    #[test]
    fn entropy_bounds() {
        assert_eq!(entropy(&[0; 24]), 0.0);
        assert_eq!(entropy(&[5, 0, 0]), 0.0);
        let uniform = entropy(&[1; 24]);
        assert!((uniform - crate::math::ln(24.0)).abs() < 1e-12);
    }
}
