//! Averaged word-embedding content vectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::UserRecord;
use crate::{Error, Result};

/// Longest token, in characters, the segmenter will try.
pub const MAX_TOKEN_CHARS: usize = 8;

/// Dense token vectors stored row-major in one buffer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WordVectorTable {
    dimension: usize,
    index: BTreeMap<String, usize>,
    data: Vec<f64>,
}

impl WordVectorTable {
    pub fn new(dimension: usize) -> Self {
        WordVectorTable { dimension, index: BTreeMap::new(), data: Vec::new() }
    }

    /// Adds a token; a repeated token keeps its first vector and returns `false`.
    pub fn insert(&mut self, token: impl Into<String>, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dimension {
            return Err(Error::WidthMismatch { expected: self.dimension, got: vector.len() });
        }
        let token = token.into();
        if self.index.contains_key(&token) {
            return Ok(false);
        }
        self.index.insert(token, self.index.len());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&row| &self.data[row * self.dimension..(row + 1) * self.dimension])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Greedy forward maximum matching. Text is split on whitespace, then each
/// chunk is scanned left to right taking the longest prefix (up to
/// `max_chars` characters) accepted by `known`; a position where nothing
/// matches yields its single character with `known == false`.
pub fn max_match<'t>(text: &'t str, max_chars: usize, known: impl Fn(&str) -> bool) -> Vec<(&'t str, bool)> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let bounds: Vec<usize> = chunk.char_indices().map(|(i, _)| i).chain([chunk.len()]).collect();
        let chars = bounds.len() - 1;
        let mut i = 0;
        while i < chars {
            let longest = max_chars.min(chars - i);
            let hit = (1..=longest).rev().find(|&l| known(&chunk[bounds[i]..bounds[i + l]]));
            match hit {
                Some(l) => {
                    out.push((&chunk[bounds[i]..bounds[i + l]], true));
                    i += l;
                }
                None => {
                    out.push((&chunk[bounds[i]..bounds[i + 1]], false));
                    i += 1;
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OovStats {
    pub documents: usize,
    /// Documents with no in-vocabulary token (contributing a zero vector).
    pub oov_documents: usize,
    pub tokens: usize,
    pub oov_tokens: usize,
}

/// Running mean: `mean += (x - mean) / k`. Averaging copies of one vector
/// returns that vector bit for bit.
fn accumulate(mean: &mut [f64], x: &[f64], k: usize) {
    let k = k as f64;
    for (m, v) in mean.iter_mut().zip(x) {
        *m += (v - *m) / k;
    }
}

fn document_vector(text: &str, table: &WordVectorTable, stats: &mut OovStats) -> Vec<f64> {
    let mut doc = vec![0.0; table.dimension()];
    let mut hits = 0;
    for (token, known) in max_match(text, MAX_TOKEN_CHARS, |t| table.contains(t)) {
        stats.tokens += 1;
        if known {
            hits += 1;
            accumulate(&mut doc, table.get(token).expect("known token"), hits);
        } else {
            stats.oov_tokens += 1;
        }
    }
    if hits == 0 {
        stats.oov_documents += 1;
    }
    doc
}

/// Mean over documents of per-document mean token vectors. Each post is a
/// document; a nonempty profile description is one more.
pub fn extract_content(user: &UserRecord, table: &WordVectorTable) -> Result<(Vec<f64>, OovStats)> {
    if table.is_empty() {
        return Err(Error::Config("word-vector table is empty".into()));
    }
    let mut stats = OovStats::default();
    let mut user_vec = vec![0.0; table.dimension()];
    let docs = user
        .posts
        .iter()
        .map(|p| p.text.as_str())
        .chain((!user.profile.description.is_empty()).then_some(user.profile.description.as_str()));
    for (k, text) in docs.enumerate() {
        let doc = document_vector(text, table, &mut stats);
        accumulate(&mut user_vec, &doc, k + 1);
        stats.documents += 1;
    }
    Ok((user_vec, stats))
}
