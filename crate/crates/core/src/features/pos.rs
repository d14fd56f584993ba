use std::collections::HashMap;
use std::str::FromStr;

use super::FeatureError;

const DEFAULT_POS: &str = include_str!("../../data/default.pos");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PosTag {
    Prep,
    Conj,
    Aux,
    Pron,
    Art,
    Det,
    Adv,
    Adj,
    Verb,
    Noun,
    Num,
    Interj,
}

impl PosTag {
    /// Verbs, adjectives, adverbs, prepositions and conjunctions count as
    /// propositions for idea density.
    pub fn is_proposition(self) -> bool {
        matches!(self, PosTag::Verb | PosTag::Adj | PosTag::Adv | PosTag::Prep | PosTag::Conj)
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "prep" => PosTag::Prep,
            "conj" => PosTag::Conj,
            "aux" => PosTag::Aux,
            "pron" => PosTag::Pron,
            "art" => PosTag::Art,
            "det" => PosTag::Det,
            "adv" => PosTag::Adv,
            "adj" => PosTag::Adj,
            "verb" => PosTag::Verb,
            "noun" => PosTag::Noun,
            "num" => PosTag::Num,
            "interj" => PosTag::Interj,
            other => return Err(format!("unknown tag `{other}`")),
        })
    }
}

/// Word list plus suffix rules standing in for a tagger.
///
/// Listed words take their listed tag. Otherwise the longest matching suffix
/// rule applies, but only when the token has at least two characters beyond
/// the suffix (so `red` is not read as a past-tense verb).
#[derive(Clone, Debug)]
pub struct PosLexicon {
    words: HashMap<String, PosTag>,
    suffixes: Vec<(String, PosTag)>,
}

impl PosLexicon {
    pub fn parse(text: &str) -> Result<PosLexicon, FeatureError> {
        let mut words = HashMap::new();
        let mut suffixes = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| FeatureError::PosFile { line: i + 1, message };
            let (entry, tag) = line
                .split_once('\t')
                .ok_or_else(|| err(format!("expected `word<TAB>tag`, got `{line}`")))?;
            let tag: PosTag = tag.trim().parse().map_err(err)?;
            let entry = entry.trim().to_lowercase();
            match entry.strip_prefix('-') {
                Some("") => return Err(err("empty suffix".into())),
                Some(suffix) => suffixes.push((suffix.to_string(), tag)),
                None => {
                    words.insert(entry, tag);
                }
            }
        }
        suffixes.sort_by(|a, b| b.0.chars().count().cmp(&a.0.chars().count()).then(a.0.cmp(&b.0)));
        Ok(PosLexicon { words, suffixes })
    }

    pub fn tag(&self, token: &str) -> Option<PosTag> {
        if let Some(&t) = self.words.get(token) {
            return Some(t);
        }
        let len = token.chars().count();
        self.suffixes
            .iter()
            .find(|(s, _)| len >= s.chars().count() + 2 && token.ends_with(s.as_str()))
            .map(|(_, t)| *t)
    }
}

impl Default for PosLexicon {
    fn default() -> Self {
        PosLexicon::parse(DEFAULT_POS).expect("bundled POS lexicon parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_words_and_suffixes() {
        let pos = PosLexicon::default();
        assert_eq!(pos.tag("on"), Some(PosTag::Prep));
        assert_eq!(pos.tag("and"), Some(PosTag::Conj));
        assert_eq!(pos.tag("is"), Some(PosTag::Aux));
        assert_eq!(pos.tag("quickly"), Some(PosTag::Adv));
        assert_eq!(pos.tag("washing"), Some(PosTag::Verb));
        assert_eq!(pos.tag("jumped"), Some(PosTag::Verb));
        assert_eq!(pos.tag("red"), None);
        assert_eq!(pos.tag("fly"), None);
        assert_eq!(pos.tag("cookie"), None);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(PosLexicon::parse("run\tverbish"), Err(FeatureError::PosFile { line: 1, .. })));
        assert!(matches!(PosLexicon::parse("# c\nrun verb"), Err(FeatureError::PosFile { line: 2, .. })));
        assert!(PosLexicon::parse("-\tadv").is_err());
    }

    #[test]
    fn longest_suffix_wins() {
        let pos = PosLexicon::parse("-s\tnoun\n-ness\tnoun\n-ess\tverb\n").unwrap();
        assert_eq!(pos.tag("kindness"), Some(PosTag::Noun));
        assert_eq!(pos.tag("confess"), Some(PosTag::Verb));
    }
}
