//! Line-delimited JSON posts and profiles, joined into user records.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDateTime, SecondsFormat, TimeZone};
use cyberaggr_core::data::{
    count_hashtags, count_mentions, count_urls, extract_emoticons, Gender, Post, Profile, UserRecord,
};
use cyberaggr_core::time::Timestamp;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, CliError, Result};

/// Offset applied to timestamps that carry no zone.
pub const NAIVE_UTC_OFFSET_SECS: i32 = 8 * 3600;

#[derive(Debug, Deserialize)]
struct PostLine {
    user_id: String,
    post_id: String,
    timestamp: String,
    text: String,
    #[serde(default)]
    has_picture: bool,
    #[serde(default)]
    is_retweet: bool,
    mention_count: Option<u32>,
    hashtag_count: Option<u32>,
    url_count: Option<u32>,
    emoticon_tokens: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
struct ProfileLine {
    user_id: String,
    #[serde(default)]
    gender: String,
    #[serde(default)]
    verified: bool,
    #[serde(default)]
    follower_count: u64,
    #[serde(default)]
    followee_count: u64,
    #[serde(default)]
    description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedLine {
    pub file: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub users: usize,
    pub posts: usize,
    pub users_without_posts: usize,
    /// Timestamps without a zone, read as UTC+8.
    pub naive_timestamps: usize,
    /// Post ids repeated within a user; the first occurrence is kept.
    pub duplicate_posts: Vec<(String, String)>,
    pub dropped_lines: Vec<DroppedLine>,
    pub warnings: Vec<String>,
}

impl IngestReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "users: {}", self.users);
        let _ = writeln!(s, "posts: {}", self.posts);
        let _ = writeln!(s, "users without posts: {}", self.users_without_posts);
        let _ = writeln!(s, "naive timestamps read as UTC+8: {}", self.naive_timestamps);
        let _ = writeln!(s, "duplicate posts: {}", self.duplicate_posts.len());
        for (u, p) in &self.duplicate_posts {
            let _ = writeln!(s, "  {u}/{p}");
        }
        let _ = writeln!(s, "dropped lines: {}", self.dropped_lines.len());
        for d in &self.dropped_lines {
            let _ = writeln!(s, "  {}:{}: {}", d.file, d.line, d.reason);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// Parses an ISO-8601 timestamp. Zoned values are taken as given; naive ones
/// are read as UTC+8. The flag reports the latter.
pub fn parse_timestamp(s: &str) -> Option<(Timestamp, bool)> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some((Timestamp::from_unix(dt.timestamp()), false));
    }
    let naive = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())?;
    let offset = FixedOffset::east_opt(NAIVE_UTC_OFFSET_SECS).expect("valid offset");
    let dt = offset.from_local_datetime(&naive).single()?;
    Some((Timestamp::from_unix(dt.timestamp()), true))
}

pub fn format_timestamp(ts: Timestamp) -> String {
    ts.to_utc().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_gender(s: &str) -> Option<Gender> {
    match s {
        "m" => Some(Gender::Male),
        "f" => Some(Gender::Female),
        "" => Some(Gender::Unknown),
        _ => None,
    }
}

fn gender_code(g: Gender) -> &'static str {
    match g {
        Gender::Male => "m",
        Gender::Female => "f",
        Gender::Unknown => "",
    }
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty())
}

/// Joins posts onto profiles. Malformed lines and posts of unknown users are
/// skipped and recorded; users keep profile order.
pub fn ingest_str(posts: &str, profiles: &str) -> (Vec<UserRecord>, IngestReport) {
    let mut report = IngestReport::default();
    let drop = |report: &mut IngestReport, file: &str, line: usize, reason: String| {
        report.dropped_lines.push(DroppedLine { file: file.into(), line, reason });
    };

    let mut order: Vec<Profile> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (n, line) in numbered_lines(profiles) {
        let p: ProfileLine = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(e) => {
                drop(&mut report, "profiles", n, format!("malformed record: {e}"));
                continue;
            }
        };
        if p.user_id.is_empty() {
            drop(&mut report, "profiles", n, "empty user_id".into());
            continue;
        }
        let Some(gender) = parse_gender(&p.gender) else {
            drop(&mut report, "profiles", n, format!("unknown gender code {:?}", p.gender));
            continue;
        };
        if index.contains_key(&p.user_id) {
            drop(&mut report, "profiles", n, format!("duplicate user_id {}", p.user_id));
            continue;
        }
        index.insert(p.user_id.clone(), order.len());
        order.push(Profile {
            user_id: p.user_id,
            gender,
            verified: p.verified,
            follower_count: p.follower_count,
            followee_count: p.followee_count,
            description: p.description,
        });
    }

    let mut buckets: Vec<Vec<Post>> = vec![Vec::new(); order.len()];
    let mut any_post_line = false;
    for (n, line) in numbered_lines(posts) {
        any_post_line = true;
        let p: PostLine = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(e) => {
                drop(&mut report, "posts", n, format!("malformed record: {e}"));
                continue;
            }
        };
        let Some(&slot) = index.get(&p.user_id) else {
            drop(&mut report, "posts", n, format!("unknown user_id {}", p.user_id));
            continue;
        };
        let Some((timestamp, naive)) = parse_timestamp(&p.timestamp) else {
            drop(&mut report, "posts", n, format!("unparseable timestamp {:?}", p.timestamp));
            continue;
        };
        if !timestamp.is_plausible() {
            drop(&mut report, "posts", n, format!("timestamp {:?} precedes 2009-01-01", p.timestamp));
            continue;
        }
        if naive {
            report.naive_timestamps += 1;
        }
        buckets[slot].push(Post {
            mention_count: p.mention_count.unwrap_or_else(|| count_mentions(&p.text)),
            hashtag_count: p.hashtag_count.unwrap_or_else(|| count_hashtags(&p.text)),
            url_count: p.url_count.unwrap_or_else(|| count_urls(&p.text)),
            emoticon_tokens: p.emoticon_tokens.unwrap_or_else(|| extract_emoticons(&p.text)),
            post_id: p.post_id,
            timestamp,
            text: p.text,
            has_picture: p.has_picture,
            is_retweet: p.is_retweet,
        });
    }
    if !any_post_line {
        report.warnings.push("posts stream is empty".into());
    }

    let users: Vec<UserRecord> = order
        .into_iter()
        .zip(buckets)
        .map(|(profile, posts)| {
            let (user, dups) = UserRecord::new(profile, posts);
            for d in dups {
                report.duplicate_posts.push((user.user_id().to_string(), d));
            }
            user
        })
        .collect();
    report.users = users.len();
    report.posts = users.iter().map(|u| u.posts.len()).sum();
    report.users_without_posts = users.iter().filter(|u| u.posts.is_empty()).count();
    (users, report)
}

pub fn ingest_files(posts: &Path, profiles: &Path) -> Result<(Vec<UserRecord>, IngestReport)> {
    Ok(ingest_str(&read_to_string(posts)?, &read_to_string(profiles)?))
}

/// Serializes users back to the posts and profiles input formats, with every
/// optional key written out.
pub fn to_input_format(users: &[UserRecord]) -> (String, String) {
    let (mut posts, mut profiles) = (String::new(), String::new());
    for u in users {
        let p = &u.profile;
        let line = serde_json::json!({
            "user_id": p.user_id,
            "gender": gender_code(p.gender),
            "verified": p.verified,
            "follower_count": p.follower_count,
            "followee_count": p.followee_count,
            "description": p.description,
        });
        profiles.push_str(&line.to_string());
        profiles.push('\n');
        for post in &u.posts {
            let line = serde_json::json!({
                "user_id": p.user_id,
                "post_id": post.post_id,
                "timestamp": format_timestamp(post.timestamp),
                "text": post.text,
                "has_picture": post.has_picture,
                "is_retweet": post.is_retweet,
                "mention_count": post.mention_count,
                "hashtag_count": post.hashtag_count,
                "url_count": post.url_count,
                "emoticon_tokens": post.emoticon_tokens,
            });
            posts.push_str(&line.to_string());
            posts.push('\n');
        }
    }
    (posts, profiles)
}

/// One JSON user record per line.
pub fn write_users(users: &[UserRecord]) -> Result<String> {
    let mut out = String::new();
    for u in users {
        out.push_str(&serde_json::to_string(u)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_users(path: &Path) -> Result<Vec<UserRecord>> {
    let text = read_to_string(path)?;
    numbered_lines(&text)
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Data(format!("{}:{n}: {e}", path.display())))
        })
        .collect()
}

/// Counts by rule of users removed by the activity filter.
pub fn drop_tally(dropped: &[(String, cyberaggr_core::data::DropReason)]) -> BTreeMap<String, usize> {
    let mut t = BTreeMap::new();
    for (_, r) in dropped {
        *t.entry(r.to_string()).or_insert(0) += 1;
    }
    t
}
