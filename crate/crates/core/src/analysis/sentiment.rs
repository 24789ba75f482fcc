use serde::{Deserialize, Serialize};

use super::lexicon::Lexicon;
use super::taxonomy::{NEGATIVE, POSITIVE};
use super::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentimentBasis {
    Provider,
    Lexicon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub value: f64,
    pub basis: SentimentBasis,
}

impl SentimentScore {
    pub fn neutral() -> Self {
        Self {
            value: 0.0,
            basis: SentimentBasis::Lexicon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentLexicon {
    pub positive: Lexicon,
    pub negative: Lexicon,
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        Self {
            positive: Lexicon::parse(POSITIVE).expect("shipped lexicon is valid"),
            negative: Lexicon::parse(NEGATIVE).expect("shipped lexicon is valid"),
        }
    }
}

impl SentimentLexicon {
    pub fn hits_in_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> (u64, u64) {
        tokens.iter().fold((0, 0), |(p, n), t| {
            let t = t.as_ref();
            (
                p + u64::from(self.positive.matches(t)),
                n + u64::from(self.negative.matches(t)),
            )
        })
    }

    pub fn hits(&self, text: &str) -> (u64, u64) {
        self.hits_in_tokens(&tokenize(text))
    }
}

/// `(pos - neg) / max(1, pos + neg)`, always within [-1, 1].
pub fn lexicon_score(pos_hits: u64, neg_hits: u64) -> f64 {
    let total = (pos_hits + neg_hits).max(1) as f64;
    (pos_hits as f64 - neg_hits as f64) / total
}
