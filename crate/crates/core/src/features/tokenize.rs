/// Lowercased word tokens and sentence boundaries.
///
/// `sentence_bounds[i]` is the token count at the end of sentence `i`; the
/// bounds are strictly increasing and the last one equals `tokens.len()`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub sentence_bounds: Vec<usize>,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_bounds.len()
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Tokens are maximal runs of letters and digits, joined across apostrophes
/// that sit between two such characters (`it's`). Sentences end at `.`, `?`,
/// `!` or end of text; sentences without tokens are dropped.
pub fn tokenize(text: &str) -> TokenStream {
    let chars: Vec<char> = text.chars().collect();
    let mut out = TokenStream::default();
    let mut current = String::new();
    let close_sentence = |out: &mut TokenStream| {
        let n = out.tokens.len();
        if out.sentence_bounds.last().copied().unwrap_or(0) < n {
            out.sentence_bounds.push(n);
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
            continue;
        }
        let internal = is_apostrophe(c)
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if internal {
            current.push('\'');
            continue;
        }
        if !current.is_empty() {
            out.tokens.push(std::mem::take(&mut current));
        }
        if matches!(c, '.' | '?' | '!') {
            close_sentence(&mut out);
        }
    }
    if !current.is_empty() {
        out.tokens.push(current);
    }
    close_sentence(&mut out);
    out
}
