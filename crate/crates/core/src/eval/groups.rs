use std::collections::HashMap;
use std::str::FromStr;

use serde::Serialize;

use super::EvalError;
use crate::corpus::{Dataset, SeverityGroup, TranscriptRecord};
use crate::models::LABEL_THRESHOLD;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Sex,
    AgeDecade,
    Severity,
}

impl Grouping {
    pub const ALL: [Grouping; 3] = [Grouping::Sex, Grouping::AgeDecade, Grouping::Severity];

    pub fn as_str(self) -> &'static str {
        match self {
            Grouping::Sex => "sex",
            Grouping::AgeDecade => "age_decade",
            Grouping::Severity => "severity",
        }
    }

    fn labels(self) -> Vec<&'static str> {
        match self {
            Grouping::Sex => vec!["female", "male"],
            Grouping::AgeDecade => vec!["50-59", "60-69", "70-80", "other"],
            Grouping::Severity => SeverityGroup::ALL.iter().map(|g| g.as_str()).collect(),
        }
    }

    fn group_of(self, r: &TranscriptRecord) -> Option<&'static str> {
        match self {
            Grouping::Sex => r.sex.map(|s| s.as_str()),
            Grouping::AgeDecade => r.age.map(age_band),
            Grouping::Severity => r.severity().map(|g| g.as_str()),
        }
    }
}

impl FromStr for Grouping {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Grouping::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown grouping `{s}`"))
    }
}

/// Age bands 50-59, 60-69 and 70-80; anything else is `other`.
pub fn age_band(age: u32) -> &'static str {
    match age {
        50..=59 => "50-59",
        60..=69 => "60-69",
        70..=80 => "70-80",
        _ => "other",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupResult {
    pub group: String,
    pub n: usize,
    pub accuracy: Option<f64>,
    /// Share predicted positive.
    pub positive_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupReport {
    pub grouping: Grouping,
    pub groups: Vec<GroupResult>,
    /// Records without the grouping field or a diagnosis.
    pub excluded: usize,
    /// Largest minus smallest positive rate over non-empty groups.
    pub parity_difference: Option<f64>,
}

/// Per-group accuracy and positive-prediction rate at the default label
/// threshold. `scores[i]` belongs to the record with id `ids[i]`.
pub fn group_metrics(dataset: &Dataset, ids: &[String], scores: &[f64], grouping: Grouping) -> Result<GroupReport, EvalError> {
    if ids.len() != scores.len() {
        return Err(EvalError::LengthMismatch(ids.len(), scores.len()));
    }
    let by_id: HashMap<&str, &TranscriptRecord> = dataset.iter().map(|r| (r.id.as_str(), r)).collect();
    let labels = grouping.labels();
    let mut tallies = vec![(0usize, 0usize, 0usize); labels.len()];
    let mut excluded = 0;
    for (id, &s) in ids.iter().zip(scores) {
        let r = by_id
            .get(id.as_str())
            .ok_or_else(|| EvalError::InvalidArgument(format!("no record with id `{id}`")))?;
        let (Some(g), Some(label)) = (grouping.group_of(r), r.diagnosis) else {
            excluded += 1;
            continue;
        };
        let k = labels.iter().position(|l| *l == g).expect("group label listed");
        let predicted = s > LABEL_THRESHOLD;
        let t = &mut tallies[k];
        t.0 += 1;
        t.1 += usize::from(predicted == label);
        t.2 += usize::from(predicted);
    }
    let groups: Vec<GroupResult> = labels
        .iter()
        .zip(&tallies)
        .map(|(l, &(n, correct, positive))| GroupResult {
            group: l.to_string(),
            n,
            accuracy: (n > 0).then(|| correct as f64 / n as f64),
            positive_rate: (n > 0).then(|| positive as f64 / n as f64),
        })
        .collect();
    let rates: Vec<f64> = groups.iter().filter_map(|g| g.positive_rate).collect();
    let parity_difference = (!rates.is_empty()).then(|| {
        rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - rates.iter().cloned().fold(f64::INFINITY, f64::min)
    });
    Ok(GroupReport {
        grouping,
        groups,
        excluded,
        parity_difference,
    })
}
