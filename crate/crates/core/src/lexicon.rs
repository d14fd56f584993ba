//! Category dictionaries in the `.dic` layout and token lookup.
//!
//! ```text
//! %
//! 1	pronoun
//! 2	family
//! %
//! it	1
//! famil*	2
//! ```
//!
//! Blank lines are ignored and `#` starts a comment line. A trailing `*`
//! makes an entry a stem that matches every token with that prefix.
//! Lookup precedence: an exact entry wins outright; otherwise the longest
//! matching stem supplies the categories.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

const DEMO_DICTIONARY: &str = include_str!("../data/demo.dic");

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: entry `{word}` references undeclared category {id}")]
    UndeclaredCategory { line: usize, word: String, id: u32 },
    #[error("line {line}: wildcard must be the final character of `{word}`")]
    MisplacedWildcard { line: usize, word: String },
    #[error("dictionary header is not closed by a `%` line")]
    UnterminatedHeader,
    #[error("dictionary has no `%` header")]
    MissingHeader,
}

/// Tokens resolved against the dictionary. Empty `category_ids` means the
/// token is out of dictionary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryHit {
    pub token: String,
    pub category_ids: BTreeSet<u32>,
}

#[derive(Clone, Debug, Default)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    categories: Option<BTreeSet<u32>>,
}

/// Character trie over wildcard stems.
#[derive(Clone, Debug)]
struct StemTrie {
    nodes: Vec<TrieNode>,
}

impl StemTrie {
    fn new() -> Self {
        StemTrie {
            nodes: vec![TrieNode::default()],
        }
    }

    fn insert(&mut self, stem: &str, ids: &BTreeSet<u32>) {
        let mut at = 0;
        for c in stem.chars() {
            at = match self.nodes[at].children.get(&c) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[at].children.insert(c, next);
                    next
                }
            };
        }
        self.nodes[at]
            .categories
            .get_or_insert_with(BTreeSet::new)
            .extend(ids.iter().copied());
    }

    /// Categories of the deepest stem that prefixes `token`.
    fn longest_match(&self, token: &str) -> Option<&BTreeSet<u32>> {
        let mut at = 0;
        let mut best = self.nodes[0].categories.as_ref();
        for c in token.chars() {
            match self.nodes[at].children.get(&c) {
                Some(&next) => {
                    at = next;
                    if let Some(cats) = &self.nodes[at].categories {
                        best = Some(cats);
                    }
                }
                None => break,
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct Lexicon {
    categories: BTreeMap<u32, String>,
    exact: HashMap<String, BTreeSet<u32>>,
    stems: StemTrie,
    n_stems: usize,
}

fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

pub fn parse_dictionary(text: &str) -> Result<Lexicon, LexiconError> {
    #[derive(PartialEq)]
    enum State {
        Preamble,
        Header,
        Body,
    }
    let mut state = State::Preamble;
    let mut categories = BTreeMap::new();
    let mut exact: HashMap<String, BTreeSet<u32>> = HashMap::new();
    let mut stems: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if is_comment_or_blank(raw) {
            continue;
        }
        let line = raw.trim();
        if line == "%" {
            state = match state {
                State::Preamble => State::Header,
                State::Header => State::Body,
                State::Body => {
                    return Err(LexiconError::Syntax {
                        line: line_no,
                        message: "unexpected third `%` line".into(),
                    })
                }
            };
            continue;
        }
        match state {
            State::Preamble => return Err(LexiconError::MissingHeader),
            State::Header => {
                let (id, name) = line
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| LexiconError::Syntax {
                        line: line_no,
                        message: format!("expected `ID<TAB>name`, got `{line}`"),
                    })?;
                let id: u32 = id.parse().map_err(|_| LexiconError::Syntax {
                    line: line_no,
                    message: format!("category id `{id}` is not a non-negative integer"),
                })?;
                let name = name.trim();
                if categories.insert(id, name.to_string()).is_some() {
                    return Err(LexiconError::Syntax {
                        line: line_no,
                        message: format!("category id {id} declared twice"),
                    });
                }
            }
            State::Body => {
                let mut fields = line.split_whitespace();
                let word = fields.next().unwrap_or_default().to_lowercase();
                let mut ids = BTreeSet::new();
                for f in fields {
                    let id: u32 = f.parse().map_err(|_| LexiconError::Syntax {
                        line: line_no,
                        message: format!("category id `{f}` is not a non-negative integer"),
                    })?;
                    if !categories.contains_key(&id) {
                        return Err(LexiconError::UndeclaredCategory {
                            line: line_no,
                            word,
                            id,
                        });
                    }
                    ids.insert(id);
                }
                if ids.is_empty() {
                    return Err(LexiconError::Syntax {
                        line: line_no,
                        message: format!("entry `{word}` lists no categories"),
                    });
                }
                let star = word.find('*');
                match star {
                    Some(pos) if pos + 1 != word.len() => {
                        return Err(LexiconError::MisplacedWildcard { line: line_no, word })
                    }
                    Some(_) => {
                        let stem = word.trim_end_matches('*');
                        if stem.is_empty() || stem.len() + 1 != word.len() {
                            return Err(LexiconError::MisplacedWildcard { line: line_no, word });
                        }
                        stems.entry(stem.to_string()).or_default().extend(ids);
                    }
                    None => exact.entry(word).or_default().extend(ids),
                }
            }
        }
    }
    match state {
        State::Preamble => Err(LexiconError::MissingHeader),
        State::Header => Err(LexiconError::UnterminatedHeader),
        State::Body => {
            let mut trie = StemTrie::new();
            for (stem, ids) in &stems {
                trie.insert(stem, ids);
            }
            Ok(Lexicon {
                categories,
                exact,
                stems: trie,
                n_stems: stems.len(),
            })
        }
    }
}

impl Lexicon {
    /// The bundled open demonstration dictionary (87 categories).
    pub fn demo() -> Lexicon {
        parse_dictionary(DEMO_DICTIONARY).expect("bundled dictionary parses")
    }

    pub fn lookup(&self, token: &str) -> CategoryHit {
        CategoryHit {
            token: token.to_string(),
            category_ids: self.categories_of(token).cloned().unwrap_or_default(),
        }
    }

    /// Borrowing form of [`Lexicon::lookup`]; `None` for out-of-dictionary tokens.
    pub fn categories_of(&self, token: &str) -> Option<&BTreeSet<u32>> {
        self.exact
            .get(token)
            .or_else(|| self.stems.longest_match(token))
    }

    pub fn category_name(&self, id: u32) -> Option<&str> {
        self.categories.get(&id).map(String::as_str)
    }

    pub fn category_id(&self, name: &str) -> Option<u32> {
        self.categories
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(id, _)| *id)
    }

    /// Categories in ascending id order.
    pub fn categories(&self) -> impl Iterator<Item = (u32, &str)> {
        self.categories.iter().map(|(id, n)| (*id, n.as_str()))
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn n_entries(&self) -> usize {
        self.exact.len() + self.n_stems
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(ids: &[u32]) -> BTreeSet<u32> {
        ids.iter().copied().collect()
    }

    #[test]
    fn single_entry() {
        let lex = parse_dictionary("%\n1\tpronoun\n%\nit\t1\n").unwrap();
        assert_eq!(lex.lookup("it").category_ids, set(&[1]));
        assert!(lex.lookup("cat").category_ids.is_empty());
    }

    #[test]
    fn wildcard_and_multi_category() {
        let lex = parse_dictionary("%\n7\trun\n12\tmotion\n40\tfamily\n%\nfamil*\t40\nrun\t7\t12\n").unwrap();
        assert!(lex.lookup("family").category_ids.contains(&40));
        assert!(lex.lookup("families").category_ids.contains(&40));
        assert!(lex.lookup("familiar").category_ids.contains(&40));
        assert!(lex.lookup("fam").category_ids.is_empty());
        assert_eq!(lex.lookup("run").category_ids, set(&[7, 12]));
    }

    #[test]
    fn exact_beats_wildcard() {
        let lex = parse_dictionary("%\n3\ta\n9\tb\n%\nkind\t3\nkind*\t9\n").unwrap();
        assert_eq!(lex.lookup("kind").category_ids, set(&[3]));
        assert_eq!(lex.lookup("kindly").category_ids, set(&[9]));
    }

    #[test]
    fn longest_stem_wins() {
        let lex = parse_dictionary("%\n1\ta\n2\tb\n%\nun*\t1\nunder*\t2\n").unwrap();
        assert_eq!(lex.lookup("understand").category_ids, set(&[2]));
        assert_eq!(lex.lookup("unhappy").category_ids, set(&[1]));
        assert_eq!(lex.lookup("unde").category_ids, set(&[1]));
    }

    #[test]
    fn comments_blanks_and_case() {
        let lex = parse_dictionary("# header\n\n%\n1\tx\n%\n# entries\nHello\t1\n\n").unwrap();
        assert_eq!(lex.lookup("hello").category_ids, set(&[1]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_dictionary("%\n1\tx\n%\nit\t2\n").unwrap_err();
        assert_eq!(
            err,
            LexiconError::UndeclaredCategory {
                line: 4,
                word: "it".into(),
                id: 2
            }
        );
        let err = parse_dictionary("%\n1\tx\n%\nfa*mily\t1\n").unwrap_err();
        assert!(matches!(err, LexiconError::MisplacedWildcard { line: 4, .. }));
        let err = parse_dictionary("%\n1\tx\n%\nfam**\t1\n").unwrap_err();
        assert!(matches!(err, LexiconError::MisplacedWildcard { .. }));
        assert!(matches!(parse_dictionary("%\n1\tx\n"), Err(LexiconError::UnterminatedHeader)));
        assert!(matches!(parse_dictionary("it 1"), Err(LexiconError::MissingHeader)));
    }

    #[test]
    fn demo_dictionary_shape() {
        let lex = Lexicon::demo();
        assert_eq!(lex.n_categories(), 87);
        let pronoun = lex.category_id("pronoun").unwrap();
        let assent = lex.category_id("assent").unwrap();
        assert!(lex.lookup("it").category_ids.contains(&pronoun));
        assert!(lex.lookup("yeah").category_ids.contains(&assent));
        let family = lex.category_id("family").unwrap();
        assert!(lex.lookup("families").category_ids.contains(&family));
    }

    /// Naive oracle: scan every entry, apply the precedence rule directly.
    fn oracle(entries: &[(String, Vec<u32>)], token: &str) -> BTreeSet<u32> {
        let exact: BTreeSet<u32> = entries
            .iter()
            .filter(|(w, _)| w == token)
            .flat_map(|(_, ids)| ids.iter().copied())
            .collect();
        if !exact.is_empty() {
            return exact;
        }
        let best_len = entries
            .iter()
            .filter_map(|(w, _)| w.strip_suffix('*'))
            .filter(|stem| token.starts_with(stem))
            .map(|stem| stem.len())
            .max();
        match best_len {
            None => BTreeSet::new(),
            Some(len) => entries
                .iter()
                .filter(|(w, _)| w.strip_suffix('*').is_some_and(|s| s.len() == len && token.starts_with(s)))
                .flat_map(|(_, ids)| ids.iter().copied())
                .collect(),
        }
    }

    fn render(entries: &[(String, Vec<u32>)]) -> String {
        let mut s = String::from("%\n1\ta\n2\tb\n3\tc\n4\td\n%\n");
        for (w, ids) in entries {
            s.push_str(w);
            for id in ids {
                s.push('\t');
                s.push_str(&id.to_string());
            }
            s.push('\n');
        }
        s
    }

    fn entry() -> impl Strategy<Value = (String, Vec<u32>)> {
        ("[ab]{1,4}", any::<bool>(), prop::collection::vec(1u32..=4, 1..3))
            .prop_map(|(w, star, ids)| (if star { format!("{w}*") } else { w }, ids))
    }

    proptest! {
        #[test]
        fn lookup_matches_linear_scan(entries in prop::collection::vec(entry(), 1..12), token in "[ab]{1,6}") {
            let lex = parse_dictionary(&render(&entries)).unwrap();
            prop_assert_eq!(lex.lookup(&token).category_ids, oracle(&entries, &token));
        }

        #[test]
        fn lookup_independent_of_entry_order(
            entries in prop::collection::vec(entry(), 1..12).prop_shuffle(),
            token in "[ab]{1,6}",
        ) {
            let forward = parse_dictionary(&render(&entries)).unwrap();
            let mut reversed = entries.clone();
            reversed.reverse();
            let backward = parse_dictionary(&render(&reversed)).unwrap();
            prop_assert_eq!(forward.lookup(&token), backward.lookup(&token));
        }
    }
}
