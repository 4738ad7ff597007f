//! Word-vector and emotion-lexicon files.

use std::path::Path;
use std::str::FromStr;

use cyberaggr_core::features::{Emotion, EmotionLexicon, WordVectorTable};

use crate::error::{read_to_string, CliError, Result};

/// Lexicon used when the configuration names none.
pub const DEFAULT_LEXICON: &str = include_str!("../data/emotion_lexicon.csv");

/// Vocabulary statistics from loading a word-vector file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VectorLoad {
    pub tokens: usize,
    /// Repeated tokens; the first vector is kept.
    pub duplicates: usize,
    pub had_header: bool,
}

/// `token v1 .. vD` per line. A first line of exactly two integers is a
/// `count dim` header.
pub fn parse_word_vectors(text: &str, origin: &str) -> Result<(WordVectorTable, VectorLoad)> {
    let mut stats = VectorLoad::default();
    let mut table: Option<WordVectorTable> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').filter(|f| !f.is_empty()).collect();
        if n == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok()) {
            let dim: usize = fields[1].parse().expect("checked");
            if dim == 0 {
                return Err(CliError::Data(format!("{origin}:1: header declares dimension 0")));
            }
            table = Some(WordVectorTable::new(dim));
            stats.had_header = true;
            continue;
        }
        let (token, values) = fields.split_first().ok_or_else(|| CliError::Data(format!("{origin}:{n}: empty line")))?;
        let values: Vec<f64> = values
            .iter()
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| CliError::Data(format!("{origin}:{n}: non-numeric vector component")))?;
        let t = table.get_or_insert_with(|| WordVectorTable::new(values.len()));
        if values.len() != t.dimension() {
            return Err(CliError::Data(format!(
                "{origin}:{n}: expected {} components, found {}",
                t.dimension(),
                values.len()
            )));
        }
        if t.insert(*token, &values)? {
            stats.tokens += 1;
        } else {
            stats.duplicates += 1;
        }
    }
    let table = table.ok_or_else(|| CliError::Validation(format!("{origin}: word-vector file is empty")))?;
    if table.is_empty() {
        return Err(CliError::Validation(format!("{origin}: word-vector file has no entries")));
    }
    Ok((table, stats))
}

pub fn load_word_vectors(path: &Path) -> Result<(WordVectorTable, VectorLoad)> {
    parse_word_vectors(&read_to_string(path)?, &path.display().to_string())
}

/// Writes `(token, vector)` pairs with a `count dim` header.
pub fn format_word_vectors<'a>(dim: usize, entries: impl ExactSizeIterator<Item = (&'a str, &'a [f64])>) -> String {
    let mut out = format!("{} {dim}\n", entries.len());
    for (token, v) in entries {
        out.push_str(token);
        for x in v {
            out.push(' ');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

/// `token,emotion` rows; a leading `token,emotion` header is optional.
pub fn parse_lexicon(text: &str, origin: &str) -> Result<EmotionLexicon> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut lex = EmotionLexicon::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (token, emotion) = (rec.get(0).unwrap_or(""), rec.get(1).unwrap_or(""));
        if i == 0 && token.eq_ignore_ascii_case("token") && emotion.eq_ignore_ascii_case("emotion") {
            continue;
        }
        let emotion = Emotion::from_str(emotion).map_err(|e| CliError::Data(format!("{origin}:{}: {e}", i + 1)))?;
        lex.insert(token, emotion).map_err(|e| CliError::Data(format!("{origin}:{}: {e}", i + 1)))?;
    }
    Ok(lex)
}

pub fn load_lexicon(path: Option<&Path>) -> Result<EmotionLexicon> {
    match path {
        Some(p) => parse_lexicon(&read_to_string(p)?, &p.display().to_string()),
        None => parse_lexicon(DEFAULT_LEXICON, "built-in lexicon"),
    }
}
