//! The 41 basic features: profile, posting tempo, post composition, text
//! form and a diurnal summary.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{entropy, BASIC_WIDTH};
use crate::data::{Gender, UserRecord};
use crate::math::{ln, ln_1p, sqrt};
use crate::time::{LocalClock, SECS_PER_DAY, SECS_PER_HOUR};

/// Registry of the basic block, index-aligned with [`extract_basic`].
pub const BASIC_NAMES: [&str; BASIC_WIDTH] = [
    // profile
    "gender_code",
    "verified",
    "log1p_followers",
    "log1p_followees",
    "log_follow_ratio",
    "description_chars",
    "description_present",
    "log1p_posts",
    // tempo
    "span_days",
    "posts_per_day",
    "active_days",
    "active_day_proportion",
    "longest_gap_days",
    "mean_gap_hours",
    "sd_gap_hours",
    "max_posts_one_day",
    "mean_posts_per_active_day",
    // composition
    "prop_original",
    "prop_retweet",
    "picture_posts",
    "prop_picture",
    "prop_with_mentions",
    "mean_mentions",
    "prop_with_hashtags",
    "mean_hashtags",
    "prop_with_urls",
    "prop_with_emoticons",
    // text form
    "mean_text_chars",
    "sd_text_chars",
    "max_text_chars",
    "min_text_chars",
    "mean_punctuation",
    "prop_question",
    "prop_exclamation",
    // diurnal
    "prop_hours_00_06",
    "prop_hours_06_12",
    "prop_hours_12_18",
    "prop_hours_18_24",
    "prop_weekend",
    "hour_entropy",
    "weekday_entropy",
];

const FULLWIDTH_PUNCT: &[char] = &[
    '，', '。', '！', '？', '、', '；', '：', '“', '”', '‘', '’', '（', '）', '《', '》', '【', '】', '…', '—', '～',
    '·', '「', '」',
];

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || FULLWIDTH_PUNCT.contains(&c)
}

/// Population mean and standard deviation.
fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, sqrt(var))
}

pub fn extract_basic(user: &UserRecord, clock: LocalClock) -> [f64; BASIC_WIDTH] {
    let mut f = Vec::with_capacity(BASIC_WIDTH);
    let p = &user.profile;
    let posts = &user.posts;
    let n = posts.len();
    let nf = n as f64;
    let ratio = |k: usize| if n == 0 { 0.0 } else { k as f64 / nf };

    // profile
    f.push(match p.gender {
        Gender::Male => 0.0,
        Gender::Female => 1.0,
        Gender::Unknown => 0.5,
    });
    f.push(if p.verified { 1.0 } else { 0.0 });
    f.push(ln_1p(p.follower_count as f64));
    f.push(ln_1p(p.followee_count as f64));
    f.push(ln((p.follower_count as f64 + 1.0) / (p.followee_count as f64 + 1.0)));
    f.push(p.description.chars().count() as f64);
    f.push(if p.description.is_empty() { 0.0 } else { 1.0 });
    f.push(ln_1p(nf));

    // tempo
    let mut per_day: BTreeMap<i64, usize> = BTreeMap::new();
    for post in posts {
        *per_day.entry(clock.day(post.timestamp)).or_default() += 1;
    }
    let (span_secs, calendar_days) = match (posts.first(), posts.last()) {
        (Some(a), Some(b)) => (
            (b.timestamp.unix() - a.timestamp.unix()) as f64,
            (clock.day(b.timestamp) - clock.day(a.timestamp) + 1) as f64,
        ),
        _ => (0.0, 1.0),
    };
    let gaps: Vec<f64> = posts
        .windows(2)
        .map(|w| (w[1].timestamp.unix() - w[0].timestamp.unix()) as f64 / SECS_PER_HOUR as f64)
        .collect();
    let (gap_mean, gap_sd) = mean_sd(&gaps);
    let active_days = per_day.len();
    f.push(span_secs / SECS_PER_DAY as f64);
    f.push(nf / calendar_days);
    f.push(active_days as f64);
    f.push(if n == 0 { 0.0 } else { active_days as f64 / calendar_days });
    f.push(gaps.iter().copied().fold(0.0, f64::max) / 24.0);
    f.push(gap_mean);
    f.push(gap_sd);
    f.push(per_day.values().copied().max().unwrap_or(0) as f64);
    f.push(if active_days == 0 { 0.0 } else { nf / active_days as f64 });

    // composition
    let count = |pred: &dyn Fn(&crate::data::Post) -> bool| posts.iter().filter(|p| pred(p)).count();
    let retweets = count(&|p| p.is_retweet);
    let pictures = count(&|p| p.has_picture);
    let mean_of = |get: &dyn Fn(&crate::data::Post) -> u32| {
        if n == 0 {
            0.0
        } else {
            posts.iter().map(|p| f64::from(get(p))).sum::<f64>() / nf
        }
    };
    f.push(ratio(n - retweets));
    f.push(ratio(retweets));
    f.push(pictures as f64);
    f.push(ratio(pictures));
    f.push(ratio(count(&|p| p.mention_count > 0)));
    f.push(mean_of(&|p| p.mention_count));
    f.push(ratio(count(&|p| p.hashtag_count > 0)));
    f.push(mean_of(&|p| p.hashtag_count));
    f.push(ratio(count(&|p| p.url_count > 0)));
    f.push(ratio(count(&|p| !p.emoticon_tokens.is_empty())));

    // text form
    let lengths: Vec<f64> = posts.iter().map(|p| p.text.chars().count() as f64).collect();
    let (len_mean, len_sd) = mean_sd(&lengths);
    f.push(len_mean);
    f.push(len_sd);
    f.push(lengths.iter().copied().fold(0.0, f64::max));
    f.push(lengths.iter().copied().reduce(f64::min).unwrap_or(0.0));
    f.push(mean_of(&|p| p.text.chars().filter(|&c| is_punct(c)).count() as u32));
    f.push(ratio(count(&|p| p.text.contains(['?', '？']))));
    f.push(ratio(count(&|p| p.text.contains(['!', '！']))));

    // diurnal
    let mut hours = [0usize; 24];
    let mut weekdays = [0usize; 7];
    for post in posts {
        hours[clock.hour(post.timestamp)] += 1;
        weekdays[clock.weekday(post.timestamp)] += 1;
    }
    for quarter in hours.chunks(6) {
        f.push(ratio(quarter.iter().sum()));
    }
    f.push(ratio(weekdays[5] + weekdays[6]));
    f.push(entropy(&hours));
    f.push(entropy(&weekdays));

    f.try_into().expect("basic registry width")
}
