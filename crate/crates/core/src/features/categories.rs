use std::collections::BTreeMap;

use super::schema::{FeatureKind, FeatureSchema};
use super::tokenize::TokenStream;
use super::FeatureError;
use crate::lexicon::Lexicon;

/// Dictionary category percentages plus the general descriptors.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryProfile {
    pub word_count: f64,
    pub words_per_sentence: f64,
    /// Percent of tokens with any dictionary category.
    pub dictionary_percent: f64,
    /// Percent of tokens with more than six letters.
    pub six_letter_percent: f64,
    /// Category name to percent of tokens, for every dictionary category.
    pub percents: BTreeMap<String, f64>,
}

pub fn category_percentages(stream: &TokenStream, lexicon: &Lexicon) -> Result<CategoryProfile, FeatureError> {
    if stream.is_empty() {
        return Err(FeatureError::EmptyTranscript { id: None });
    }
    let n = stream.len() as f64;
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    let mut in_dictionary = 0usize;
    let mut long_words = 0usize;
    for token in &stream.tokens {
        if token.chars().filter(|c| c.is_alphabetic()).count() > 6 {
            long_words += 1;
        }
        if let Some(ids) = lexicon.categories_of(token) {
            if !ids.is_empty() {
                in_dictionary += 1;
            }
            for id in ids {
                *counts.entry(*id).or_insert(0) += 1;
            }
        }
    }
    let percents = lexicon
        .categories()
        .map(|(id, name)| (name.to_string(), 100.0 * counts.get(&id).copied().unwrap_or(0) as f64 / n))
        .collect();
    Ok(CategoryProfile {
        word_count: n,
        words_per_sentence: n / stream.sentence_count().max(1) as f64,
        dictionary_percent: 100.0 * in_dictionary as f64 / n,
        six_letter_percent: 100.0 * long_words as f64 / n,
        percents,
    })
}

/// Every summary feature of `schema`, in schema order.
pub fn summary_variables(percents: &BTreeMap<String, f64>, schema: &FeatureSchema) -> Vec<(String, f64)> {
    schema
        .features()
        .iter()
        .filter_map(|f| match &f.kind {
            FeatureKind::Summary(a) => Some((f.name.clone(), a.evaluate(&f.name, percents))),
            _ => None,
        })
        .collect()
}
