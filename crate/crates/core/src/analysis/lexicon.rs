use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One lexicon entry. A trailing `*` in the file form marks a stem that
/// matches any token starting with it; otherwise the token must be equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LexTerm {
    stem: String,
    prefix: bool,
}

impl LexTerm {
    pub fn parse(raw: &str) -> Result<Self, String> {
        let raw = raw.trim();
        let (stem, prefix) = match raw.strip_suffix('*') {
            Some(s) => (s, true),
            None => (raw, false),
        };
        let stem = stem.to_lowercase();
        if stem.is_empty() {
            return Err(format!("empty lexicon term `{raw}`"));
        }
        if !stem.chars().all(char::is_alphanumeric) {
            return Err(format!("lexicon term `{raw}` must be a single word"));
        }
        Ok(Self { stem, prefix })
    }

    pub fn matches(&self, token: &str) -> bool {
        if self.prefix {
            token.starts_with(&self.stem)
        } else {
            token == self.stem
        }
    }
}

impl TryFrom<String> for LexTerm {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        Self::parse(&s)
    }
}

impl From<LexTerm> for String {
    fn from(t: LexTerm) -> String {
        t.to_string()
    }
}

impl fmt::Display for LexTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.stem)?;
        if self.prefix {
            f.write_str("*")?;
        }
        Ok(())
    }
}

/// Compiled term set used for token matching.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    exact: BTreeSet<String>,
    stems: Vec<String>,
}

impl Lexicon {
    /// Parses the line format: one term per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self, String> {
        let terms = parse_terms(text)?;
        Ok(Self::from_terms(&terms))
    }

    pub fn from_terms<'a>(terms: impl IntoIterator<Item = &'a LexTerm>) -> Self {
        let mut lex = Self::default();
        for t in terms {
            if t.prefix {
                lex.stems.push(t.stem.clone());
            } else {
                lex.exact.insert(t.stem.clone());
            }
        }
        lex.stems.sort();
        lex.stems.dedup();
        lex
    }

    pub fn from_words<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Result<Self, String> {
        let terms = words
            .into_iter()
            .map(|w| LexTerm::parse(w.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_terms(&terms))
    }

    pub fn matches(&self, token: &str) -> bool {
        self.exact.contains(token) || self.stems.iter().any(|s| token.starts_with(s.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty() && self.stems.is_empty()
    }
}

pub(crate) fn parse_terms(text: &str) -> Result<Vec<LexTerm>, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(LexTerm::parse)
        .collect()
}
