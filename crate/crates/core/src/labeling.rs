//! Survey scoring and μ ± σ/2 trisection into high / neutral / low groups.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math::sqrt;
use crate::{Error, Result};

/// The three aggression subscales, each a separate prediction target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    SocialExclusion,
    MaliciousHumour,
    GuiltInduction,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::SocialExclusion, Target::MaliciousHumour, Target::GuiltInduction];

    /// Number of Likert items on the subscale.
    pub const fn item_count(self) -> usize {
        match self {
            Target::SocialExclusion => 10,
            Target::MaliciousHumour => 9,
            Target::GuiltInduction => 6,
        }
    }

    /// Column prefix in survey and label files (`se`, `mh`, `gi`).
    pub const fn short(self) -> &'static str {
        match self {
            Target::SocialExclusion => "se",
            Target::MaliciousHumour => "mh",
            Target::GuiltInduction => "gi",
        }
    }

    pub const fn display_name(self) -> &'static str {
        match self {
            Target::SocialExclusion => "Social exclusion",
            Target::MaliciousHumour => "Malicious humour",
            Target::GuiltInduction => "Guilt induction",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::SocialExclusion => "social_exclusion",
            Target::MaliciousHumour => "malicious_humour",
            Target::GuiltInduction => "guilt_induction",
        })
    }
}

impl core::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "social_exclusion" | "se" => Ok(Target::SocialExclusion),
            "malicious_humour" | "mh" => Ok(Target::MaliciousHumour),
            "guilt_induction" | "gi" => Ok(Target::GuiltInduction),
            _ => Err(Error::InvalidParameter(alloc::format!("unknown target {s:?}"))),
        }
    }
}

/// Ternary label. Ordered Low < Neutral < High; class index 0, 1, 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Level {
    Low,
    Neutral,
    High,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Low, Level::Neutral, Level::High];

    pub const fn value(self) -> i8 {
        match self {
            Level::Low => -1,
            Level::Neutral => 0,
            Level::High => 1,
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Level> {
        Level::ALL.get(i).copied()
    }

    pub fn from_value(v: i8) -> Option<Level> {
        match v {
            -1 => Some(Level::Low),
            0 => Some(Level::Neutral),
            1 => Some(Level::High),
            _ => None,
        }
    }
}

impl From<Level> for i8 {
    fn from(l: Level) -> i8 {
        l.value()
    }
}

impl TryFrom<i8> for Level {
    type Error = String;

    fn try_from(v: i8) -> core::result::Result<Self, String> {
        Level::from_value(v).ok_or_else(|| alloc::format!("label {v} not in {{-1, 0, 1}}"))
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub user_id: String,
    pub social_exclusion: Vec<u8>,
    pub malicious_humour: Vec<u8>,
    pub guilt_induction: Vec<u8>,
}

impl SurveyResponse {
    pub fn items(&self, target: Target) -> &[u8] {
        match target {
            Target::SocialExclusion => &self.social_exclusion,
            Target::MaliciousHumour => &self.malicious_humour,
            Target::GuiltInduction => &self.guilt_induction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for target in Target::ALL {
            let items = self.items(target);
            if items.len() != target.item_count() {
                return Err(Error::ItemCount { target, expected: target.item_count(), got: items.len() });
            }
            if let Some((index, &value)) = items.iter().enumerate().find(|(_, v)| !(1..=7).contains(*v)) {
                return Err(Error::ItemOutOfRange { target, index, value: value.into() });
            }
        }
        Ok(())
    }
}

/// Per-user subscale means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggressionScores {
    pub social_exclusion: f64,
    pub malicious_humour: f64,
    pub guilt_induction: f64,
}

impl AggressionScores {
    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::SocialExclusion => self.social_exclusion,
            Target::MaliciousHumour => self.malicious_humour,
            Target::GuiltInduction => self.guilt_induction,
        }
    }
}

pub fn score_survey(resp: &SurveyResponse) -> Result<AggressionScores> {
    resp.validate()?;
    let mean = |items: &[u8]| items.iter().map(|&v| f64::from(v)).sum::<f64>() / items.len() as f64;
    Ok(AggressionScores {
        social_exclusion: mean(&resp.social_exclusion),
        malicious_humour: mean(&resp.malicious_humour),
        guilt_induction: mean(&resp.guilt_induction),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrisectionThresholds {
    pub target: Target,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TrisectionThresholds {
    pub fn from_moments(target: Target, mean: f64, sd: f64) -> Self {
        TrisectionThresholds { target, mean, sd, lo: mean - sd / 2.0, hi: mean + sd / 2.0 }
    }

    /// Above `hi` is high, below `lo` is low; the closed interval between is neutral.
    pub fn assign(&self, score: f64) -> Level {
        if score > self.hi {
            Level::High
        } else if score < self.lo {
            Level::Low
        } else {
            Level::Neutral
        }
    }
}

pub fn fit_thresholds(scores: &[f64], target: Target) -> Result<TrisectionThresholds> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::TooFewScores(n));
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    let ss: f64 = scores.iter().map(|s| (s - mean) * (s - mean)).sum();
    let sd = sqrt(ss / (n - 1) as f64);
    Ok(TrisectionThresholds::from_moments(target, mean, sd))
}

pub fn assign_label(score: f64, th: &TrisectionThresholds) -> Level {
    th.assign(score)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    pub user_id: String,
    /// Indexed by [`Target::index`].
    pub labels: [Level; 3],
}

impl LabelSet {
    pub fn get(&self, target: Target) -> Level {
        self.labels[target.index()]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub high: usize,
    pub neutral: usize,
    pub low: usize,
}

impl GroupCounts {
    pub fn add(&mut self, level: Level) {
        match level {
            Level::High => self.high += 1,
            Level::Neutral => self.neutral += 1,
            Level::Low => self.low += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.high + self.neutral + self.low
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortLabels {
    pub thresholds: [TrisectionThresholds; 3],
    pub labels: Vec<LabelSet>,
    pub counts: [GroupCounts; 3],
}

/// Fits thresholds per target over the whole cohort, then labels every user.
pub fn label_cohort(scores: &[(String, AggressionScores)]) -> Result<CohortLabels> {
    let fit = |target: Target| {
        let column: Vec<f64> = scores.iter().map(|(_, s)| s.get(target)).collect();
        fit_thresholds(&column, target)
    };
    let thresholds = [fit(Target::SocialExclusion)?, fit(Target::MaliciousHumour)?, fit(Target::GuiltInduction)?];
    let mut counts = [GroupCounts::default(); 3];
    let labels = scores
        .iter()
        .map(|(id, s)| {
            let labels = Target::ALL.map(|t| thresholds[t.index()].assign(s.get(t)));
            for t in Target::ALL {
                counts[t.index()].add(labels[t.index()]);
            }
            LabelSet { user_id: id.clone(), labels }
        })
        .collect();
    Ok(CohortLabels { thresholds, labels, counts })
}
