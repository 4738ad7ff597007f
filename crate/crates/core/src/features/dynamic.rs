//! Hour-of-day and day-of-week interaction rates.
//!
//! For each interaction (posting, mentioning, retweeting): 24 average daily
//! occurrences per hour slot, then 7 average weekly occurrences per weekday
//! (Monday first). Rates divide by the inclusive local-day span, floored at
//! one day, and by that span in weeks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::DYNAMIC_WIDTH;
use crate::data::{Post, UserRecord};
use crate::time::LocalClock;

pub const INTERACTIONS: [&str; 3] = ["post", "mention", "retweet"];

const WEEKDAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

pub fn dynamic_names() -> Vec<String> {
    let mut out = Vec::with_capacity(DYNAMIC_WIDTH);
    for kind in INTERACTIONS {
        out.extend((0..24).map(|h| format!("dyn_{kind}_h{h:02}")));
        out.extend(WEEKDAYS.iter().map(|d| format!("dyn_{kind}_{d}")));
    }
    out
}

fn selected(kind: usize, post: &Post) -> bool {
    match kind {
        0 => true,
        1 => post.mention_count > 0,
        _ => post.is_retweet,
    }
}

/// Inclusive local-day span, at least one day.
pub(crate) fn span_days(user: &UserRecord, clock: LocalClock) -> f64 {
    match (user.posts.first(), user.posts.last()) {
        (Some(a), Some(b)) => ((clock.day(b.timestamp) - clock.day(a.timestamp) + 1).max(1)) as f64,
        _ => 1.0,
    }
}

pub fn extract_dynamic(user: &UserRecord, clock: LocalClock) -> [f64; DYNAMIC_WIDTH] {
    let days = span_days(user, clock);
    let weeks = days / 7.0;
    let mut out = [0.0; DYNAMIC_WIDTH];
    for (kind, chunk) in out.chunks_mut(31).enumerate() {
        let mut hours = [0usize; 24];
        let mut weekdays = [0usize; 7];
        for post in user.posts.iter().filter(|p| selected(kind, p)) {
            hours[clock.hour(post.timestamp)] += 1;
            weekdays[clock.weekday(post.timestamp)] += 1;
        }
        for (slot, c) in chunk[..24].iter_mut().zip(hours) {
            *slot = c as f64 / days;
        }
        for (slot, c) in chunk[24..].iter_mut().zip(weekdays) {
            *slot = c as f64 / weeks;
        }
    }
    out
}
