//! Lexicon and emoticon based five-way emotion classification.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::content::max_match;
use super::EMOTION_WIDTH;
use crate::data::UserRecord;
use crate::{Error, Result};

/// Declaration order is also the tie-break priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Disgust,
    Happiness,
    Sadness,
    Fear,
}

impl Emotion {
    pub const ALL: [Emotion; 5] = [Emotion::Anger, Emotion::Disgust, Emotion::Happiness, Emotion::Sadness, Emotion::Fear];

    pub const fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Fear => "fear",
        }
    }
}

impl core::str::FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown emotion {s:?}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmotionLexicon {
    map: BTreeMap<String, Emotion>,
    max_chars: usize,
}

impl EmotionLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// A token may be listed twice only with the same emotion.
    pub fn insert(&mut self, token: impl Into<String>, emotion: Emotion) -> Result<()> {
        let token = token.into();
        if token.trim().is_empty() {
            return Err(Error::InvalidParameter("empty lexicon token".into()));
        }
        match self.map.get(&token) {
            Some(e) if *e != emotion => Err(Error::DuplicateId(format!("{token} ({} vs {})", e.name(), emotion.name()))),
            Some(_) => Ok(()),
            None => {
                self.max_chars = self.max_chars.max(token.chars().count());
                self.map.insert(token, emotion);
                Ok(())
            }
        }
    }

    pub fn get(&self, token: &str) -> Option<Emotion> {
        self.map.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// The emotion with the most lexicon hits in `text`, or `None` without hits.
pub fn classify_text(text: &str, lex: &EmotionLexicon) -> Option<Emotion> {
    if lex.is_empty() {
        return None;
    }
    let mut hits = [0usize; EMOTION_WIDTH];
    for (token, known) in max_match(text, lex.max_chars, |t| lex.map.contains_key(t)) {
        if known {
            hits[lex.get(token).expect("known") as usize] += 1;
        }
    }
    let mut best = 0;
    for i in 1..EMOTION_WIDTH {
        if hits[i] > hits[best] {
            best = i;
        }
    }
    (hits[best] > 0).then(|| Emotion::ALL[best])
}

/// Share of the user's posts classified as each emotion.
pub fn extract_emotion(user: &UserRecord, lex: &EmotionLexicon) -> [f64; EMOTION_WIDTH] {
    let mut counts = [0usize; EMOTION_WIDTH];
    for post in &user.posts {
        if let Some(e) = classify_text(&post.text, lex) {
            counts[e as usize] += 1;
        }
    }
    let n = user.posts.len();
    counts.map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Gender, Post, Profile};
    use crate::time::Timestamp;
    use alloc::vec::Vec;

    fn lex() -> EmotionLexicon {
        let mut l = EmotionLexicon::new();
        l.insert("[怒]", Emotion::Anger).unwrap();
        l.insert("气死", Emotion::Anger).unwrap();
        l.insert("[哈哈]", Emotion::Happiness).unwrap();
        l.insert("开心", Emotion::Happiness).unwrap();
        l.insert("[泪]", Emotion::Sadness).unwrap();
        l.insert("恶心", Emotion::Disgust).unwrap();
        l
    }

    fn user(texts: &[&str]) -> UserRecord {
        let profile = Profile {
            user_id: "u".into(),
            gender: Gender::Female,
            verified: false,
            follower_count: 0,
            followee_count: 0,
            description: String::new(),
        };
        let posts: Vec<Post> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Post::from_text(format!("p{i}"), Timestamp::from_unix(1_600_000_000 + i as i64), *t, false, false))
            .collect();
        UserRecord::new(profile, posts).0
    }

    #[test]
    fn all_anger() {
        assert_eq!(extract_emotion(&user(&["气死了[怒]", "[怒]"]), &lex()), [1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mixed_with_unclassified() {
        let f = extract_emotion(&user(&["今天开心", "[泪]", "nothing", "平常"]), &lex());
        assert_eq!(f, [0.0, 0.0, 0.25, 0.25, 0.0]);
    }

    #[test]
    fn ties_follow_priority() {
        assert_eq!(classify_text("恶心 开心", &lex()), Some(Emotion::Disgust));
        assert_eq!(classify_text("[哈哈][泪]", &lex()), Some(Emotion::Happiness));
        assert_eq!(classify_text("开心开心 [怒]", &lex()), Some(Emotion::Happiness));
    }

    #[test]
    fn empty_lexicon() {
        assert_eq!(extract_emotion(&user(&["[怒]"]), &EmotionLexicon::new()), [0.0; 5]);
    }

    #[test]
    fn conflicting_entries_rejected() {
        let mut l = lex();
        assert!(l.insert("开心", Emotion::Happiness).is_ok());
        assert!(matches!(l.insert("开心", Emotion::Fear), Err(Error::DuplicateId(_))));
    }
}
