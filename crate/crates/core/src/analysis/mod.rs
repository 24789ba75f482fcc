//! Interview analytics: rolling summaries, follow-up suggestions, sentence
//! tagging against a configurable taxonomy, keyword statistics, sentiment
//! and thematic reports.
//!
//! All model-facing work goes through [`AnalysisProvider`]. The
//! [`RuleBasedProvider`] is a deterministic fallback that needs no network;
//! [`AnalysisEngine`] wraps any provider and enforces the output contracts.

mod engine;
mod keywords;
mod lexicon;
mod prompts;
mod provider;
mod report;
mod rule_based;
mod sentiment;
mod tagging;
mod taxonomy;
mod text;

pub use engine::{AnalysisConfig, AnalysisEngine, AnalysisSnapshot, SummaryOutput, Tagging};
pub use keywords::{keyword_frequency, KeywordStat};
pub use lexicon::{LexTerm, Lexicon};
pub use prompts::{PromptSet, PromptTemplate};
pub use provider::{AnalysisProvider, ProviderError, ProviderKind};
pub use report::{ThematicReport, ThemeGroup};
pub use rule_based::{AnalysisResources, RuleBasedProvider};
pub use sentiment::{lexicon_score, SentimentBasis, SentimentLexicon, SentimentScore};
pub use tagging::{validate_tagging, Polarity, TaggedSentence};
pub use taxonomy::{LabelDef, TagLabel, Taxonomy, TaxonomyRegistry};
pub use text::{respondent_segments, tokenize};

use thiserror::Error;

use crate::session::SessionState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("report requires an ended session, session is {0}")]
    State(SessionState),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}
