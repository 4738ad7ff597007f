//! Users, posts and the active-user filter.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::time::{Timestamp, SECS_PER_DAY};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub timestamp: Timestamp,
    pub text: String,
    pub has_picture: bool,
    pub is_retweet: bool,
    pub mention_count: u32,
    pub hashtag_count: u32,
    pub url_count: u32,
    pub emoticon_tokens: Vec<String>,
}

impl Post {
    /// Builds a post whose interaction counts and emoticons are derived from `text`.
    pub fn from_text(
        post_id: impl Into<String>,
        timestamp: Timestamp,
        text: impl Into<String>,
        has_picture: bool,
        is_retweet: bool,
    ) -> Self {
        let text = text.into();
        Post {
            post_id: post_id.into(),
            timestamp,
            mention_count: count_mentions(&text),
            hashtag_count: count_hashtags(&text),
            url_count: count_urls(&text),
            emoticon_tokens: extract_emoticons(&text),
            text,
            has_picture,
            is_retweet,
        }
    }
}

/// `@` immediately followed by a non-space character.
pub fn count_mentions(text: &str) -> u32 {
    let mut chars = text.chars().peekable();
    let mut n = 0;
    while let Some(c) = chars.next() {
        if c == '@' {
            if let Some(next) = chars.peek() {
                if !next.is_whitespace() && *next != '@' {
                    n += 1;
                }
            }
        }
    }
    n
}

/// Topics are written `#topic#`: `#` marks are paired left to right and
/// each pair enclosing non-blank text counts once.
pub fn count_hashtags(text: &str) -> u32 {
    let mut n = 0;
    let mut parts = text.split('#').skip(1);
    while let (Some(inner), Some(_)) = (parts.next(), parts.clone().next()) {
        if !inner.trim().is_empty() {
            n += 1;
        }
        // Skip the text after the closing mark.
        parts.next();
    }
    n
}

pub fn count_urls(text: &str) -> u32 {
    (text.matches("http://").count() + text.matches("https://").count()) as u32
}

/// Bracketed emoticon codes such as `[哈哈]`, up to 8 characters inside.
pub fn extract_emoticons(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        match after.find(']') {
            Some(close) => {
                let inner = &after[..close];
                let len = inner.chars().count();
                let valid = (1..=8).contains(&len)
                    && !inner.chars().any(|c| c.is_whitespace() || c == '[');
                if valid {
                    out.push(rest[open..open + close + 2].to_string());
                    rest = &after[close + 1..];
                } else {
                    rest = after;
                }
            }
            None => break,
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub user_id: String,
    pub gender: Gender,
    pub verified: bool,
    pub follower_count: u64,
    pub followee_count: u64,
    pub description: String,
}

/// One user with posts sorted by `(timestamp, post_id)` and unique post ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub profile: Profile,
    pub posts: Vec<Post>,
}

impl UserRecord {
    /// Normalizes `posts`: the first occurrence of a post id wins, then posts
    /// are ordered by time. Returns the ids of discarded duplicates.
    pub fn new(profile: Profile, posts: Vec<Post>) -> (Self, Vec<String>) {
        let mut seen = BTreeSet::new();
        let mut duplicates = Vec::new();
        let mut kept = Vec::with_capacity(posts.len());
        for p in posts {
            if seen.insert(p.post_id.clone()) {
                kept.push(p);
            } else {
                duplicates.push(p.post_id);
            }
        }
        kept.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.post_id.cmp(&b.post_id)));
        (UserRecord { profile, posts: kept }, duplicates)
    }

    pub fn user_id(&self) -> &str {
        &self.profile.user_id
    }

    pub fn is_sorted(&self) -> bool {
        self.posts.windows(2).all(|w| w[0].timestamp <= w[1].timestamp)
    }
}

/// How "active for at least N months" is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveSpanRule {
    /// Posts fall in at least N distinct UTC calendar months.
    CalendarMonths,
    /// First and last post are at least `days_per_month * N` days apart.
    SpanDays { days_per_month: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivityFilterPolicy {
    /// Users need strictly more posts than this.
    pub min_posts: usize,
    pub min_active_months: u32,
    pub latest_post_not_before: NaiveDate,
    pub active_span: ActiveSpanRule,
}

impl Default for ActivityFilterPolicy {
    fn default() -> Self {
        ActivityFilterPolicy {
            min_posts: 20,
            min_active_months: 2,
            latest_post_not_before: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            active_span: ActiveSpanRule::CalendarMonths,
        }
    }
}

impl ActivityFilterPolicy {
    pub fn validate(&self) -> crate::Result<()> {
        if self.min_active_months < 1 {
            return Err(crate::Error::InvalidParameter("min_active_months must be >= 1".into()));
        }
        if let ActiveSpanRule::SpanDays { days_per_month: 0 } = self.active_span {
            return Err(crate::Error::InvalidParameter("days_per_month must be >= 1".into()));
        }
        Ok(())
    }

    /// The first rule `user` fails, if any.
    pub fn check(&self, user: &UserRecord) -> Option<DropReason> {
        if user.posts.len() <= self.min_posts {
            return Some(DropReason::PostCount);
        }
        let active = match self.active_span {
            ActiveSpanRule::CalendarMonths => {
                let months: BTreeSet<(i32, u32)> =
                    user.posts.iter().map(|p| p.timestamp.utc_month()).collect();
                months.len() >= self.min_active_months as usize
            }
            ActiveSpanRule::SpanDays { days_per_month } => {
                let first = user.posts.first().map(|p| p.timestamp.unix()).unwrap_or(0);
                let last = user.posts.last().map(|p| p.timestamp.unix()).unwrap_or(0);
                let needed = i64::from(days_per_month) * i64::from(self.min_active_months);
                last - first >= needed * SECS_PER_DAY
            }
        };
        if !active {
            return Some(DropReason::ActiveMonths);
        }
        let latest = user.posts.iter().map(|p| p.timestamp).max()?;
        if latest.utc_date() < self.latest_post_not_before {
            return Some(DropReason::Recency);
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    PostCount,
    ActiveMonths,
    Recency,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::PostCount => "post count",
            DropReason::ActiveMonths => "active months",
            DropReason::Recency => "latest post",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<UserRecord>,
    pub dropped: Vec<(String, DropReason)>,
}

/// Splits `users` into active users and dropped ids with their first failing rule.
pub fn apply_activity_filter(users: Vec<UserRecord>, policy: &ActivityFilterPolicy) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for user in users {
        match policy.check(&user) {
            None => out.kept.push(user),
            Some(reason) => out.dropped.push((user.profile.user_id.clone(), reason)),
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub users: usize,
    pub male: usize,
    pub female: usize,
    pub unknown: usize,
    pub total_posts: usize,
    pub min_posts: usize,
    pub max_posts: usize,
    pub mean_posts: f64,
    /// Mean days between a user's first and last post.
    pub mean_span_days: f64,
    pub posts_by_year: BTreeMap<i32, usize>,
}

pub fn dataset_summary(users: &[UserRecord]) -> Summary {
    let mut s = Summary::default();
    if users.is_empty() {
        return s;
    }
    s.users = users.len();
    s.min_posts = usize::MAX;
    let mut span_total = 0.0;
    for u in users {
        match u.profile.gender {
            Gender::Male => s.male += 1,
            Gender::Female => s.female += 1,
            Gender::Unknown => s.unknown += 1,
        }
        let n = u.posts.len();
        s.total_posts += n;
        s.min_posts = s.min_posts.min(n);
        s.max_posts = s.max_posts.max(n);
        if let (Some(first), Some(last)) = (u.posts.first(), u.posts.last()) {
            span_total += (last.timestamp.unix() - first.timestamp.unix()) as f64 / SECS_PER_DAY as f64;
        }
        for p in &u.posts {
            *s.posts_by_year.entry(p.timestamp.utc_date().year()).or_default() += 1;
        }
    }
    s.mean_posts = s.total_posts as f64 / s.users as f64;
    s.mean_span_days = span_total / s.users as f64;
    s
}
