use rand::{seq::SliceRandom, RngExt};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset, Sex, TranscriptRecord};
use crate::rng;

/// Content words for picture-description style transcripts. A class with
/// richness `r` draws its content words from the first `r` entries.
pub const SCENE_VOCABULARY: &[&str] = &[
    "boy", "girl", "cookie", "jar", "stool", "mother", "sink", "water", "dishes", "window",
    "curtains", "kitchen", "plate", "cupboard", "floor", "counter", "towel", "cup", "shelf", "garden",
    "tree", "grass", "path", "bush", "door", "apron", "shoes", "hair", "hand", "arm",
    "lid", "faucet", "drain", "puddle", "bowl", "saucer", "cabinet", "handle", "knob", "outside",
    "falling", "reaching", "washing", "drying", "overflowing", "standing", "tipping", "grabbing", "spilling", "laughing",
    "splashing", "stealing", "watching", "holding", "climbing", "wobbling", "dripping", "pointing", "whispering", "giggling",
    "sunny", "afternoon", "summer", "yard", "lawn", "fence", "sidewalk", "flowers", "leaves", "sky",
    "brother", "sister", "children", "lady", "woman", "kids", "family", "daughter", "son", "neighbor",
    "mess", "accident", "trouble", "danger", "careful", "distracted", "busy", "daydreaming", "unaware", "oblivious",
    "dishcloth", "tap", "basin", "crockery", "utensils", "tablecloth", "drawer", "pantry", "biscuit", "snack",
    "quietly", "quickly", "suddenly", "carefully", "secretly", "happily", "nervously", "slowly", "eagerly", "calmly",
    "tall", "wooden", "blue", "striped", "open", "wet", "slippery", "empty", "full", "broken",
    "reflection", "scene", "picture", "household", "chores", "weekend", "sunlight", "breeze", "shadow", "corner",
    "mischief", "balance", "tumble", "crash", "splash", "silence", "laughter", "glance", "moment", "surprise",
    "trousers", "shirt", "dress", "sleeves", "socks", "sandals", "ribbon", "collar", "pocket", "buttons",
    "teapot", "kettle", "spoon", "fork", "ladle", "napkin", "tray", "pitcher", "glass", "mug",
];

const IMPERSONAL: &[&str] = &["it", "that", "this"];
const PERSONAL: &[&str] = &["they", "he", "she"];
const ASSENT: &[&str] = &["yeah", "ok", "yes", "okay"];
const FILLERS: &[&str] = &["um", "uh"];
const FUNCTION: &[&str] = &["the", "a", "and", "is", "on", "in", "of", "to", "with"];
const FUNCTION_RATE: f64 = 0.35;

/// Per-class generation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    /// Number of distinct content words available to the class.
    pub richness: usize,
    pub pronoun_rate: f64,
    /// Fraction of pronoun draws taken from the impersonal set.
    pub impersonal_share: f64,
    pub assent_rate: f64,
    pub filler_rate: f64,
    pub mmse_mean: f64,
    pub mmse_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_positive: i64,
    pub n_negative: i64,
    pub positive: ClassProfile,
    pub negative: ClassProfile,
    pub words_min: usize,
    pub words_max: usize,
    pub id_prefix: String,
}

impl Default for SyntheticSpec {
    /// Planted signal: positives use more pronouns (mostly impersonal ones)
    /// and more assent words, draw
    /// on a slightly narrower vocabulary, and have lower MMSE.
    fn default() -> Self {
        SyntheticSpec {
            n_positive: 200,
            n_negative: 200,
            positive: ClassProfile {
                richness: 140,
                pronoun_rate: 0.12,
                impersonal_share: 0.8,
                assent_rate: 0.05,
                filler_rate: 0.03,
                mmse_mean: 18.0,
                mmse_sd: 5.0,
            },
            negative: ClassProfile {
                richness: 160,
                pronoun_rate: 0.05,
                impersonal_share: 0.5,
                assent_rate: 0.01,
                filler_rate: 0.02,
                mmse_mean: 28.0,
                mmse_sd: 1.5,
            },
            words_min: 60,
            words_max: 160,
            id_prefix: "syn".to_string(),
        }
    }
}

impl SyntheticSpec {
    /// Both classes share the negative profile, so no feature carries signal.
    pub fn null(n_positive: i64, n_negative: i64) -> Self {
        let base = SyntheticSpec::default();
        SyntheticSpec {
            n_positive,
            n_negative,
            positive: base.negative.clone(),
            ..base
        }
    }

    pub fn with_sizes(mut self, n_positive: i64, n_negative: i64) -> Self {
        self.n_positive = n_positive;
        self.n_negative = n_negative;
        self
    }

    /// Dictionary categories whose rates differ between the default profiles.
    pub fn planted_categories() -> &'static [&'static str] {
        &["pronoun", "ipron", "assent"]
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.n_positive <= 0 || self.n_negative <= 0 {
            return Err(CorpusError::InvalidSynthetic(format!(
                "class sizes must be positive, got {} positive and {} negative",
                self.n_positive, self.n_negative
            )));
        }
        if self.words_min == 0 || self.words_min > self.words_max {
            return Err(CorpusError::InvalidSynthetic("word range must satisfy 0 < min <= max".into()));
        }
        for (name, p) in [("positive", &self.positive), ("negative", &self.negative)] {
            if p.richness == 0 || p.richness > SCENE_VOCABULARY.len() {
                return Err(CorpusError::InvalidSynthetic(format!(
                    "{name} richness must be in 1..={}",
                    SCENE_VOCABULARY.len()
                )));
            }
            if !(0.0..=1.0).contains(&p.impersonal_share) {
                return Err(CorpusError::InvalidSynthetic(format!("{name} impersonal_share must be in [0,1]")));
            }
            let total = p.pronoun_rate + p.assent_rate + p.filler_rate;
            if [p.pronoun_rate, p.assent_rate, p.filler_rate].iter().any(|r| !(0.0..=1.0).contains(r))
                || total > 1.0
            {
                return Err(CorpusError::InvalidSynthetic(format!("{name} token rates must sum to at most 1")));
            }
            if !(p.mmse_sd >= 0.0) {
                return Err(CorpusError::InvalidSynthetic(format!("{name} mmse_sd must be non-negative")));
            }
        }
        Ok(())
    }
}

fn transcript(profile: &ClassProfile, spec: &SyntheticSpec, rng: &mut rng::SplitMix64) -> String {
    let n_words = rng.random_range(spec.words_min..=spec.words_max);
    let vocab = &SCENE_VOCABULARY[..profile.richness];
    let mut text = String::new();
    let mut in_sentence = 0usize;
    let mut sentence_len = rng.random_range(4..=10usize);
    for _ in 0..n_words {
        let u: f64 = rng.random();
        let word = if u < profile.pronoun_rate {
            let set = if rng.random::<f64>() < profile.impersonal_share { IMPERSONAL } else { PERSONAL };
            set[rng.random_range(0..set.len())]
        } else if u < profile.pronoun_rate + profile.assent_rate {
            ASSENT[rng.random_range(0..ASSENT.len())]
        } else if u < profile.pronoun_rate + profile.assent_rate + profile.filler_rate {
            FILLERS[rng.random_range(0..FILLERS.len())]
        } else if rng.random::<f64>() < FUNCTION_RATE {
            FUNCTION[rng.random_range(0..FUNCTION.len())]
        } else {
            vocab[rng.random_range(0..vocab.len())]
        };
        if in_sentence == 0 {
            if !text.is_empty() {
                text.push(' ');
            }
            let mut chars = word.chars();
            if let Some(first) = chars.next() {
                text.extend(first.to_uppercase());
                text.push_str(chars.as_str());
            }
        } else {
            text.push(' ');
            text.push_str(word);
        }
        in_sentence += 1;
        if in_sentence == sentence_len {
            text.push('.');
            in_sentence = 0;
            sentence_len = rng.random_range(4..=10usize);
        }
    }
    if in_sentence > 0 {
        text.push('.');
    }
    text
}

/// Deterministic labelled corpus. Record `i` uses stream `mix(seed, i)`;
/// the class order is a seeded shuffle. The generation parameters and seed are recorded in
/// the dataset name.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Dataset, CorpusError> {
    spec.validate()?;
    let n = (spec.n_positive + spec.n_negative) as usize;
    let mut labels: Vec<bool> = std::iter::repeat_n(true, spec.n_positive as usize)
        .chain(std::iter::repeat_n(false, spec.n_negative as usize))
        .collect();
    labels.shuffle(&mut rng::stream(rng::mix(seed, u64::MAX)));
    let width = n.to_string().len().max(4);
    let mut records = Vec::with_capacity(n);
    for (i, &positive) in labels.iter().enumerate() {
        let mut rng = rng::stream(rng::mix(seed, i as u64));
        let profile = if positive { &spec.positive } else { &spec.negative };
        let text = transcript(profile, spec, &mut rng);
        let mmse = Normal::new(profile.mmse_mean, profile.mmse_sd)
            .map(|d| d.sample(&mut rng))
            .unwrap_or(profile.mmse_mean)
            .round()
            .clamp(0.0, 30.0) as u8;
        let age = rng.random_range(50..=80u32);
        let sex = if rng.random::<bool>() { Sex::Female } else { Sex::Male };
        records.push(TranscriptRecord {
            id: format!("{}-{:0width$}", spec.id_prefix, i),
            text,
            diagnosis: Some(positive),
            mmse: Some(mmse),
            age: Some(age),
            sex: Some(sex),
            language: "en".to_string(),
        });
    }
    let params = serde_json::to_string(spec).expect("spec serializes");
    Dataset::new(format!("synthetic{params}#seed={seed}"), records)
}
