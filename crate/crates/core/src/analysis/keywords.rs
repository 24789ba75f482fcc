use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lexicon::Lexicon;
use super::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordStat {
    pub token: String,
    pub count: u64,
}

pub(crate) fn is_keyword(token: &str, stopwords: &Lexicon) -> bool {
    token.chars().count() >= 2 && !stopwords.matches(token)
}

pub(crate) fn keyword_counts<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    stopwords: &Lexicon,
) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for text in texts {
        for token in tokenize(text) {
            if is_keyword(&token, stopwords) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// Exact keyword counts ranked by count descending, then token ascending.
///
/// Tokens are lowercased runs of alphanumerics; single-character tokens and
/// stopwords are dropped.
pub fn keyword_frequency<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    stopwords: &Lexicon,
) -> Vec<KeywordStat> {
    let mut stats: Vec<KeywordStat> = keyword_counts(texts, stopwords)
        .into_iter()
        .map(|(token, count)| KeywordStat { token, count })
        .collect();
    stats.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token)));
    stats
}
