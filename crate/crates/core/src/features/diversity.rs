use std::collections::HashMap;

use super::pos::PosLexicon;
use super::tokenize::TokenStream;
use super::FeatureError;

/// Exponent in Brunet's index `W = N^(V^-0.165)`.
pub const BRUNET_EXPONENT: f64 = 0.165;

/// The five lexical-diversity indices of one transcript.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LexicalDiversity {
    /// Carroll's corrected type-token ratio `V / sqrt(2N)`.
    pub cttr: f64,
    pub brunet_w: f64,
    /// Honoré's statistic `100 ln N / (1 - V1/V)`; `+inf` when every token
    /// is a hapax. Use [`LexicalDiversity::honore_r_resolved`] for storage.
    pub honore_r: f64,
    pub idea_density: f64,
    /// Share of tokens equal to their predecessor.
    pub duplicate_proportion: f64,
    pub(crate) tokens: usize,
    pub(crate) types: usize,
}

impl LexicalDiversity {
    /// Honoré's statistic with the all-hapax singularity replaced by
    /// `100 ln N / eps`, `eps = 1 / (2V)`.
    pub fn honore_r_resolved(&self) -> f64 {
        if self.honore_r.is_finite() {
            self.honore_r
        } else {
            let eps = 1.0 / (2.0 * self.types as f64);
            100.0 * (self.tokens as f64).ln() / eps
        }
    }

    pub fn honore_is_sentinel(&self) -> bool {
        !self.honore_r.is_finite()
    }
}

pub fn lexical_diversity(stream: &TokenStream, pos: &PosLexicon) -> Result<LexicalDiversity, FeatureError> {
    if stream.is_empty() {
        return Err(FeatureError::EmptyTranscript { id: None });
    }
    let n = stream.len();
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for t in &stream.tokens {
        *freq.entry(t.as_str()).or_insert(0) += 1;
    }
    let v = freq.len();
    let hapax = freq.values().filter(|&&c| c == 1).count();
    let propositions = stream
        .tokens
        .iter()
        .filter(|t| pos.tag(t).is_some_and(|tag| tag.is_proposition()))
        .count();
    let repeats = stream.tokens.windows(2).filter(|w| w[0] == w[1]).count();
    Ok(from_counts(n, v, hapax, propositions, repeats))
}

/// The closed-form indices from raw counts.
pub(crate) fn from_counts(n: usize, v: usize, hapax: usize, propositions: usize, repeats: usize) -> LexicalDiversity {
    let (nf, vf) = (n as f64, v as f64);
    let honore_r = if hapax == v {
        f64::INFINITY
    } else {
        100.0 * nf.ln() / (1.0 - hapax as f64 / vf)
    };
    LexicalDiversity {
        cttr: vf / (2.0 * nf).sqrt(),
        brunet_w: nf.powf(vf.powf(-BRUNET_EXPONENT)),
        honore_r,
        idea_density: propositions as f64 / nf,
        duplicate_proportion: repeats as f64 / nf,
        tokens: n,
        types: v,
    }
}
