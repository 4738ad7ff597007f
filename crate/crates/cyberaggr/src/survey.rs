//! Survey responses in, labels and thresholds out.

use std::collections::BTreeMap;
use std::path::Path;

use cyberaggr_core::labeling::{CohortLabels, GroupCounts, LabelSet, SurveyResponse};
use cyberaggr_core::{Level, Target};
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, CliError, Result};

pub fn survey_header() -> Vec<String> {
    let mut h = vec!["user_id".to_string()];
    for t in Target::ALL {
        h.extend((1..=t.item_count()).map(|i| format!("{}{i}", t.short())));
    }
    h
}

pub fn parse_survey(text: &str, origin: &str) -> Result<Vec<SurveyResponse>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != survey_header() {
        return Err(CliError::Data(format!(
            "{origin}: survey header must be user_id,se1..se10,mh1..mh9,gi1..gi6"
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let mut items = rec.iter().skip(1);
        let mut take = |target: Target| -> Result<Vec<u8>> {
            (0..target.item_count())
                .map(|i| {
                    let cell = items.next().unwrap_or("");
                    let v: i64 = cell.parse().map_err(|_| {
                        CliError::Data(format!("{origin}:{line}: {}{} is not an integer: {cell:?}", target.short(), i + 1))
                    })?;
                    if !(1..=7).contains(&v) {
                        return Err(CliError::Validation(format!(
                            "{origin}:{line}: {}{} = {v}, expected 1..=7",
                            target.short(),
                            i + 1
                        )));
                    }
                    Ok(v as u8)
                })
                .collect()
        };
        let resp = SurveyResponse {
            user_id: rec.get(0).unwrap_or("").to_string(),
            social_exclusion: take(Target::SocialExclusion)?,
            malicious_humour: take(Target::MaliciousHumour)?,
            guilt_induction: take(Target::GuiltInduction)?,
        };
        if resp.user_id.is_empty() {
            return Err(CliError::Data(format!("{origin}:{line}: empty user_id")));
        }
        out.push(resp);
    }
    Ok(out)
}

pub fn read_survey(path: &Path) -> Result<Vec<SurveyResponse>> {
    parse_survey(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_survey(responses: &[SurveyResponse]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(survey_header())?;
    for r in responses {
        let mut row = vec![r.user_id.clone()];
        for t in Target::ALL {
            row.extend(r.items(t).iter().map(u8::to_string));
        }
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Data(e.to_string()))?).expect("csv is utf-8"))
}

pub fn write_labels(labels: &[LabelSet]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["user_id", "se_label", "mh_label", "gi_label"])?;
    for l in labels {
        w.write_record([l.user_id.clone(), l.labels[0].to_string(), l.labels[1].to_string(), l.labels[2].to_string()])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| CliError::Data(e.to_string()))?).expect("csv is utf-8"))
}

/// Labels keyed by user id.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, LabelSet>> {
    let text = read_to_string(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<Level> {
            rec.get(i)
                .and_then(|c| c.trim().parse::<i8>().ok())
                .and_then(Level::from_value)
                .ok_or_else(|| CliError::Data(format!("{}:{}: bad label in column {}", path.display(), row + 2, i + 1)))
        };
        let set = LabelSet { user_id: rec.get(0).unwrap_or("").to_string(), labels: [parse(1)?, parse(2)?, parse(3)?] };
        out.insert(set.user_id.clone(), set);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetThresholds {
    pub target: Target,
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
    pub counts: GroupCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsFile {
    pub n: usize,
    pub targets: Vec<TargetThresholds>,
}

impl ThresholdsFile {
    pub fn from_cohort(c: &CohortLabels) -> Self {
        ThresholdsFile {
            n: c.labels.len(),
            targets: Target::ALL
                .iter()
                .map(|t| {
                    let th = &c.thresholds[t.index()];
                    TargetThresholds {
                        target: *t,
                        mean: th.mean,
                        sd: th.sd,
                        lo: th.lo,
                        hi: th.hi,
                        counts: c.counts[t.index()],
                    }
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, v: u8) -> String {
        let mut s = id.to_string();
        for _ in 0..25 {
            s.push_str(&format!(",{v}"));
        }
        s
    }

    #[test]
    fn header_shape() {
        let h = survey_header();
        assert_eq!(h.len(), 26);
        assert_eq!(h[1], "se1");
        assert_eq!(h[10], "se10");
        assert_eq!(h[11], "mh1");
        assert_eq!(h[25], "gi6");
    }

    #[test]
    fn round_trip() {
        let text = format!("{}\n{}\n{}\n", survey_header().join(","), row("a", 3), row("b", 7));
        let parsed = parse_survey(&text, "t").unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parse_survey(&write_survey(&parsed).unwrap(), "t").unwrap(), parsed);
    }

    #[test]
    fn out_of_range_names_the_item() {
        let mut bad = row("a", 3);
        bad.push_str("\n");
        let bad = bad.replacen(",3", ",9", 1);
        let text = format!("{}\n{bad}", survey_header().join(","));
        let err = parse_survey(&text, "t").unwrap_err();
        assert!(matches!(err, CliError::Validation(ref m) if m.contains("se1 = 9")), "{err}");
    }
}
