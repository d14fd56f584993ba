//! Transcript records with clinical labels, ingestion, folds, resampling and
//! a synthetic corpus generator.

mod io;
mod split;
mod synthetic;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_dataset, parse_csv, parse_jsonl, write_jsonl, Format};
pub use split::{bootstrap_sample, kfold_assign, stratified_folds, FoldAssignment};
pub use synthetic::{generate_synthetic, ClassProfile, SyntheticSpec, SCENE_VOCABULARY};

/// Highest valid MMSE score.
pub const MMSE_MAX: i64 = 30;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{field} {message} at line {line}")]
    Field {
        line: usize,
        field: String,
        message: String,
    },
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("record id must be non-empty")]
    EmptyId,
    #[error("mmse {0} outside [0,30]")]
    MmseOutOfRange(i64),
    #[error("record `{0}` has no diagnosis label")]
    MissingLabel(String),
    #[error("class {class} has {count} members, fewer than k = {k}")]
    TooFewInClass { class: String, count: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid synthetic spec: {0}")]
    InvalidSynthetic(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Female => "female",
            Sex::Male => "male",
        }
    }

    pub fn parse(s: &str) -> Option<Sex> {
        match s {
            "female" => Some(Sex::Female),
            "male" => Some(Sex::Male),
            _ => None,
        }
    }
}

/// One participant's transcript and labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptRecord {
    pub id: String,
    pub text: String,
    /// `Some(true)` for the ADRD (positive) class.
    pub diagnosis: Option<bool>,
    pub mmse: Option<u8>,
    pub age: Option<u32>,
    pub sex: Option<Sex>,
    pub language: String,
}

impl TranscriptRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        TranscriptRecord {
            id: id.into(),
            text: text.into(),
            diagnosis: None,
            mmse: None,
            age: None,
            sex: None,
            language: "en".to_string(),
        }
    }

    pub fn with_diagnosis(mut self, positive: bool) -> Self {
        self.diagnosis = Some(positive);
        self
    }

    pub fn with_mmse(mut self, mmse: u8) -> Self {
        self.mmse = Some(mmse);
        self
    }

    pub fn severity(&self) -> Option<SeverityGroup> {
        self.mmse.and_then(|m| severity_group(i64::from(m)).ok())
    }
}

/// An ordered collection of records. Iteration order equals insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    records: Vec<TranscriptRecord>,
}

impl Dataset {
    /// Validates non-empty unique ids and MMSE range.
    pub fn new(name: impl Into<String>, records: Vec<TranscriptRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.id.is_empty() {
                return Err(CorpusError::EmptyId);
            }
            if let Some(m) = r.mmse {
                if i64::from(m) > MMSE_MAX {
                    return Err(CorpusError::MmseOutOfRange(i64::from(m)));
                }
            }
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Dataset {
            name: name.into(),
            records,
        })
    }

    /// Resampled datasets repeat records, so ids are not unique.
    pub(crate) fn resampled(name: String, records: Vec<TranscriptRecord>) -> Self {
        Dataset { name, records }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TranscriptRecord> {
        self.records.iter()
    }

    pub fn get(&self, id: &str) -> Option<&TranscriptRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn into_records(self) -> Vec<TranscriptRecord> {
        self.records
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a TranscriptRecord;
    type IntoIter = std::slice::Iter<'a, TranscriptRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

/// MMSE severity groups: CN (26,30], MCI (20,26], Moderate [10,20],
/// Severe [0,10).
///
/// Boundary scores follow the interval notation literally: 26 is MCI, and
/// both 20 and 10 are Moderate. Clinical conventions differ on these
/// boundaries, so check them before comparing with other cohorts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeverityGroup {
    CN,
    MCI,
    Moderate,
    Severe,
}

impl SeverityGroup {
    pub const ALL: [SeverityGroup; 4] = [
        SeverityGroup::CN,
        SeverityGroup::MCI,
        SeverityGroup::Moderate,
        SeverityGroup::Severe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeverityGroup::CN => "CN",
            SeverityGroup::MCI => "MCI",
            SeverityGroup::Moderate => "Moderate",
            SeverityGroup::Severe => "Severe",
        }
    }
}

impl fmt::Display for SeverityGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn severity_group(mmse: i64) -> Result<SeverityGroup, CorpusError> {
    match mmse {
        27..=30 => Ok(SeverityGroup::CN),
        21..=26 => Ok(SeverityGroup::MCI),
        10..=20 => Ok(SeverityGroup::Moderate),
        0..=9 => Ok(SeverityGroup::Severe),
        _ => Err(CorpusError::MmseOutOfRange(mmse)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn severity_examples() {
        assert_eq!(severity_group(28).unwrap(), SeverityGroup::CN);
        assert_eq!(severity_group(26).unwrap(), SeverityGroup::MCI);
        assert_eq!(severity_group(20).unwrap(), SeverityGroup::Moderate);
        assert_eq!(severity_group(10).unwrap(), SeverityGroup::Moderate);
        assert_eq!(severity_group(9).unwrap(), SeverityGroup::Severe);
        assert!(severity_group(31).is_err());
        assert!(severity_group(-1).is_err());
    }

    #[test]
    fn severity_partitions_range() {
        // each integer lands in exactly the interval that contains it
        let intervals: [(SeverityGroup, f64, bool, f64, bool); 4] = [
            (SeverityGroup::CN, 26.0, false, 30.0, true),
            (SeverityGroup::MCI, 20.0, false, 26.0, true),
            (SeverityGroup::Moderate, 10.0, true, 20.0, true),
            (SeverityGroup::Severe, 0.0, true, 10.0, false),
        ];
        for m in 0..=30 {
            let x = m as f64;
            let hits: Vec<_> = intervals
                .iter()
                .filter(|(_, lo, lo_in, hi, hi_in)| {
                    (x > *lo || (*lo_in && x == *lo)) && (x < *hi || (*hi_in && x == *hi))
                })
                .map(|i| i.0)
                .collect();
            assert_eq!(hits, vec![severity_group(m).unwrap()], "mmse {m}");
        }
    }

    #[test]
    fn dataset_rejects_duplicates() {
        let recs = vec![TranscriptRecord::new("p01", "a"), TranscriptRecord::new("p01", "b")];
        assert!(matches!(Dataset::new("d", recs), Err(CorpusError::DuplicateId(id)) if id == "p01"));
    }
}
