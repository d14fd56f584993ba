//! Transcript tokenization and the feature vector: lexical diversity,
//! descriptors, summary variables and dictionary category percentages.

mod categories;
mod diversity;
mod pos;
mod schema;
mod table;
mod tokenize;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Dataset, TranscriptRecord};
use crate::lexicon::Lexicon;

pub use categories::{category_percentages, summary_variables, CategoryProfile};
pub use diversity::{lexical_diversity, LexicalDiversity, BRUNET_EXPONENT};
pub use pos::{PosLexicon, PosTag};
pub use schema::{
    fingerprint_of, AffineSummary, Descriptor, DiversityIndex, FeatureDef, FeatureKind, FeatureSchema,
};
pub use table::{quantize, FeatureTable};
pub use tokenize::{tokenize, TokenStream};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("{}", match .id {
        Some(id) => format!("cannot compute diversity of empty transcript `{id}`"),
        None => "cannot compute diversity of empty transcript".to_string(),
    })]
    EmptyTranscript { id: Option<String> },
    #[error("part-of-speech file line {line}: {message}")]
    PosFile { line: usize, message: String },
    #[error("schema line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("feature table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Feature values in schema order, tagged with the schema fingerprint.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub fingerprint: String,
    pub values: Vec<f64>,
}

/// A transcript that could not be featurized.
#[derive(Debug)]
pub struct Skipped {
    pub id: String,
    pub error: FeatureError,
}

/// Turns transcripts into feature vectors under a fixed schema.
#[derive(Clone, Debug)]
pub struct Extractor {
    lexicon: Lexicon,
    pos: PosLexicon,
    schema: FeatureSchema,
}

impl Default for Extractor {
    fn default() -> Self {
        Extractor::new(Lexicon::demo(), PosLexicon::default(), FeatureSchema::default())
    }
}

impl Extractor {
    pub fn new(lexicon: Lexicon, pos: PosLexicon, schema: FeatureSchema) -> Self {
        for f in schema.features() {
            if f.kind == FeatureKind::Category && lexicon.category_id(&f.name).is_none() {
                log::warn!("category feature `{}` is not in the dictionary and will be 0", f.name);
            }
        }
        Extractor { lexicon, pos, schema }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn extract(&self, text: &str) -> Result<FeatureVector, FeatureError> {
        let stream = tokenize(text);
        let diversity = lexical_diversity(&stream, &self.pos)?;
        let profile = category_percentages(&stream, &self.lexicon)?;
        let values = self
            .schema
            .features()
            .iter()
            .map(|f| match &f.kind {
                FeatureKind::Diversity(d) => match d {
                    DiversityIndex::Cttr => diversity.cttr,
                    DiversityIndex::BrunetW => diversity.brunet_w,
                    DiversityIndex::HonoreR => diversity.honore_r_resolved(),
                    DiversityIndex::IdeaDensity => diversity.idea_density,
                    DiversityIndex::DuplicateProportion => diversity.duplicate_proportion,
                },
                FeatureKind::Descriptor(d) => match d {
                    Descriptor::WordCount => profile.word_count,
                    Descriptor::WordsPerSentence => profile.words_per_sentence,
                    Descriptor::DictionaryPercent => profile.dictionary_percent,
                    Descriptor::SixLetterPercent => profile.six_letter_percent,
                },
                FeatureKind::Summary(a) => a.evaluate(&f.name, &profile.percents),
                FeatureKind::Category => profile.percents.get(&f.name).copied().unwrap_or(0.0),
            })
            .collect();
        Ok(FeatureVector {
            fingerprint: self.schema.fingerprint().to_string(),
            values,
        })
    }

    pub fn extract_record(&self, record: &TranscriptRecord) -> Result<FeatureVector, FeatureError> {
        self.extract(&record.text).map_err(|e| match e {
            FeatureError::EmptyTranscript { .. } => FeatureError::EmptyTranscript {
                id: Some(record.id.clone()),
            },
            other => other,
        })
    }

    /// All records, in dataset order. The first failing record aborts.
    pub fn extract_dataset(&self, dataset: &Dataset) -> Result<FeatureTable, FeatureError> {
        let rows = dataset
            .records()
            .par_iter()
            .map(|r| self.extract_record(r).map(|v| v.values))
            .collect::<Result<Vec<_>, _>>()?;
        let ids = dataset.iter().map(|r| r.id.clone()).collect();
        Ok(FeatureTable::new(self.schema.names(), ids, rows))
    }

    /// Like [`Extractor::extract_dataset`] but drops failing records.
    pub fn extract_dataset_skipping(&self, dataset: &Dataset) -> (FeatureTable, Vec<Skipped>) {
        let results: Vec<_> = dataset
            .records()
            .par_iter()
            .map(|r| self.extract_record(r))
            .collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        let mut skipped = Vec::new();
        for (r, res) in dataset.iter().zip(results) {
            match res {
                Ok(v) => {
                    ids.push(r.id.clone());
                    rows.push(v.values);
                }
                Err(error) => skipped.push(Skipped { id: r.id.clone(), error }),
            }
        }
        (FeatureTable::new(self.schema.names(), ids, rows), skipped)
    }
}

/// Default-dictionary features of one transcript.
pub fn extract_features(text: &str) -> Result<FeatureVector, FeatureError> {
    Extractor::default().extract(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vector_matches_schema() {
        let ex = Extractor::default();
        let v = ex.extract("The boy is on the stool. He is reaching for the cookie jar!").unwrap();
        assert_eq!(v.values.len(), 100);
        assert_eq!(v.fingerprint, ex.schema().fingerprint());
        assert!(v.values.iter().all(|x| x.is_finite()));
        let s = ex.schema();
        assert_eq!(v.values[s.index_of("word_count").unwrap()], 13.0);
        assert_eq!(v.values[s.index_of("words_per_sentence").unwrap()], 6.5);
        assert_relative_eq!(v.values[s.index_of("article").unwrap()], 300.0 / 13.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_transcript_names_record() {
        let ex = Extractor::default();
        let r = TranscriptRecord::new("p07", "  ... ");
        let err = ex.extract_record(&r).unwrap_err();
        assert_eq!(err.to_string(), "cannot compute diversity of empty transcript `p07`");
        assert!(matches!(extract_features(""), Err(FeatureError::EmptyTranscript { id: None })));
    }

    #[test]
    fn skipping_keeps_order() {
        let d = Dataset::new(
            "d",
            vec![
                TranscriptRecord::new("a", "one two"),
                TranscriptRecord::new("b", ""),
                TranscriptRecord::new("c", "three"),
            ],
        )
        .unwrap();
        let ex = Extractor::default();
        assert!(ex.extract_dataset(&d).is_err());
        let (t, skipped) = ex.extract_dataset_skipping(&d);
        assert_eq!(t.ids(), ["a", "c"]);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].id, "b");
    }

    #[test]
    fn all_hapax_honore_is_finite() {
        let ex = Extractor::default();
        let v = ex.extract("alpha beta gamma delta").unwrap();
        let h = v.values[ex.schema().index_of("honore_r").unwrap()];
        assert_relative_eq!(h, 200.0 * 4.0 * 4f64.ln(), epsilon = 1e-9);
    }
}
