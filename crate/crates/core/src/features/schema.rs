use std::collections::{BTreeMap, HashSet};

use sha2::{Digest, Sha256};

use super::FeatureError;

const DEFAULT_SCHEMA: &str = include_str!("../../data/default.schema");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiversityIndex {
    Cttr,
    BrunetW,
    HonoreR,
    IdeaDensity,
    DuplicateProportion,
}

impl DiversityIndex {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "cttr" => DiversityIndex::Cttr,
            "brunet_w" => DiversityIndex::BrunetW,
            "honore_r" => DiversityIndex::HonoreR,
            "idea_density" => DiversityIndex::IdeaDensity,
            "duplicate_proportion" => DiversityIndex::DuplicateProportion,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Descriptor {
    WordCount,
    WordsPerSentence,
    DictionaryPercent,
    SixLetterPercent,
}

impl Descriptor {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "word_count" => Descriptor::WordCount,
            "words_per_sentence" => Descriptor::WordsPerSentence,
            "dictionary_percent" => Descriptor::DictionaryPercent,
            "six_letter_percent" => Descriptor::SixLetterPercent,
            _ => return None,
        })
    }
}

/// `clamp(intercept + sum(weight * percent), lo, hi)` over category percents.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSummary {
    pub intercept: f64,
    pub weights: Vec<(String, f64)>,
    pub lo: f64,
    pub hi: f64,
}

impl AffineSummary {
    /// Parse `intercept;cat:weight,cat:weight,...;lo,hi`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let parts: Vec<&str> = spec.split(';').collect();
        let [intercept, weights, range] = parts.as_slice() else {
            return Err(format!("expected `intercept;weights;lo,hi`, got `{spec}`"));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
        let intercept = num(intercept)?;
        let mut parsed = Vec::new();
        for w in weights.split(',').filter(|w| !w.trim().is_empty()) {
            let (cat, value) = w
                .split_once(':')
                .ok_or_else(|| format!("weight `{w}` is not `category:weight`"))?;
            parsed.push((cat.trim().to_string(), num(value)?));
        }
        let (lo, hi) = range
            .split_once(',')
            .ok_or_else(|| format!("clamp range `{range}` is not `lo,hi`"))?;
        let (lo, hi) = (num(lo)?, num(hi)?);
        if !(lo <= hi) {
            return Err(format!("clamp range {lo},{hi} is empty"));
        }
        Ok(AffineSummary {
            intercept,
            weights: parsed,
            lo,
            hi,
        })
    }

    /// Categories absent from `percents` contribute 0 and are logged.
    pub fn evaluate(&self, name: &str, percents: &BTreeMap<String, f64>) -> f64 {
        let mut value = self.intercept;
        for (cat, w) in &self.weights {
            match percents.get(cat) {
                Some(p) => value += w * p,
                None => log::warn!("summary `{name}`: category `{cat}` not in dictionary, using 0"),
            }
        }
        value.clamp(self.lo, self.hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureKind {
    Diversity(DiversityIndex),
    Descriptor(Descriptor),
    Summary(AffineSummary),
    /// Percent of tokens in the dictionary category with the feature's name.
    Category,
}

impl FeatureKind {
    pub fn tag(&self) -> &'static str {
        match self {
            FeatureKind::Diversity(_) => "diversity",
            FeatureKind::Descriptor(_) => "descriptor",
            FeatureKind::Summary(_) => "summary",
            FeatureKind::Category => "category",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
}

/// Ordered, named feature layout.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSchema {
    features: Vec<FeatureDef>,
    fingerprint: String,
}

/// Hex SHA-256 prefix over newline-joined feature names.
pub fn fingerprint_of<S: AsRef<str>>(names: &[S]) -> String {
    let mut h = Sha256::new();
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(n.as_ref().as_bytes());
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl FeatureSchema {
    /// Lines `name<TAB>kind[<TAB>affine-spec]`; `#` comments and blanks skipped.
    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut features = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| FeatureError::Schema { line: i + 1, message };
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let (name, kind) = match fields.as_slice() {
                [name, kind] | [name, kind, _] => (*name, *kind),
                _ => return Err(err(format!("expected `name<TAB>kind[<TAB>spec]`, got `{line}`"))),
            };
            if name.is_empty() || name.contains(',') {
                return Err(err(format!("invalid feature name `{name}`")));
            }
            let kind = match (kind, fields.get(2)) {
                ("diversity", None) => FeatureKind::Diversity(
                    DiversityIndex::from_name(name).ok_or_else(|| err(format!("unknown diversity index `{name}`")))?,
                ),
                ("descriptor", None) => FeatureKind::Descriptor(
                    Descriptor::from_name(name).ok_or_else(|| err(format!("unknown descriptor `{name}`")))?,
                ),
                ("summary", Some(spec)) => FeatureKind::Summary(AffineSummary::parse(spec).map_err(err)?),
                ("summary", None) => return Err(err(format!("summary `{name}` needs an affine spec"))),
                ("category", None) => FeatureKind::Category,
                (other, _) => return Err(err(format!("unexpected kind or extra field for `{name}` (kind `{other}`)"))),
            };
            if !seen.insert(name.to_string()) {
                return Err(err(format!("duplicate feature name `{name}`")));
            }
            features.push(FeatureDef {
                name: name.to_string(),
                kind,
            });
        }
        if features.is_empty() {
            return Err(FeatureError::Schema {
                line: 0,
                message: "schema defines no features".into(),
            });
        }
        let names: Vec<&str> = features.iter().map(|f| f.name.as_str()).collect();
        let fingerprint = fingerprint_of(&names);
        Ok(FeatureSchema { features, fingerprint })
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

impl Default for FeatureSchema {
    /// 5 diversity + 4 descriptor + 4 summary + 87 category features.
    fn default() -> Self {
        FeatureSchema::parse(DEFAULT_SCHEMA).expect("bundled schema parses")
    }
}
