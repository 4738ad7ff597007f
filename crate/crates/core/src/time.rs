//! Timestamps and the local wall clock used by the behavioral features.

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

pub const SECS_PER_DAY: i64 = 86_400;
pub const SECS_PER_HOUR: i64 = 3_600;

/// Seconds since the Unix epoch, UTC, second resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(i64);

impl Timestamp {
    /// 2009-01-01T00:00:00Z; nothing earlier is accepted as a post time.
    pub const EARLIEST: Timestamp = Timestamp(1_230_768_000);

    pub const fn from_unix(secs: i64) -> Self {
        Timestamp(secs)
    }

    pub const fn unix(self) -> i64 {
        self.0
    }

    pub fn is_plausible(self) -> bool {
        self >= Self::EARLIEST
    }

    pub fn to_utc(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).expect("timestamp within chrono range")
    }

    pub fn utc_date(self) -> NaiveDate {
        self.to_utc().date_naive()
    }

    /// `(year, month)` of the UTC calendar month.
    pub fn utc_month(self) -> (i32, u32) {
        let d = self.utc_date();
        (d.year(), d.month())
    }
}

/// A fixed-offset wall clock. Posts are stored in UTC; hour-of-day and
/// weekday features are read on the clock of the users' home time zone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalClock {
    pub utc_offset_secs: i64,
}

impl Default for LocalClock {
    /// UTC+8.
    fn default() -> Self {
        LocalClock { utc_offset_secs: 8 * SECS_PER_HOUR }
    }
}

impl LocalClock {
    pub const UTC: LocalClock = LocalClock { utc_offset_secs: 0 };

    fn local(self, ts: Timestamp) -> i64 {
        ts.unix() + self.utc_offset_secs
    }

    /// Local calendar-day number (days since 1970-01-01 local).
    pub fn day(self, ts: Timestamp) -> i64 {
        self.local(ts).div_euclid(SECS_PER_DAY)
    }

    pub fn hour(self, ts: Timestamp) -> usize {
        (self.local(ts).rem_euclid(SECS_PER_DAY) / SECS_PER_HOUR) as usize
    }

    /// Monday = 0 .. Sunday = 6.
    pub fn weekday(self, ts: Timestamp) -> usize {
        // 1970-01-01 was a Thursday.
        (self.day(ts) + 3).rem_euclid(7) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weekday_and_hour() {
        // 2020-03-02 is a Monday; 10:17:00 UTC.
        let ts = Timestamp::from_unix(1_583_144_220);
        assert_eq!(LocalClock::UTC.weekday(ts), 0);
        assert_eq!(LocalClock::UTC.hour(ts), 10);
        // Same instant in UTC+8 is 18:17 Monday.
        assert_eq!(LocalClock::default().hour(ts), 18);
        assert_eq!(LocalClock::default().weekday(ts), 0);
        assert_eq!(ts.utc_month(), (2020, 3));
    }

    #[test]
    fn negative_offsets_wrap() {
        let clock = LocalClock { utc_offset_secs: -5 * SECS_PER_HOUR };
        // 2020-03-02T02:00Z is Sunday 21:00 at UTC-5.
        let ts = Timestamp::from_unix(1_583_114_400);
        assert_eq!(clock.hour(ts), 21);
        assert_eq!(clock.weekday(ts), 6);
    }
}
