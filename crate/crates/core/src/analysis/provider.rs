use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::engine::SummaryOutput;
use super::tagging::TaggedSentence;
use super::taxonomy::{TagLabel, Taxonomy};
use crate::ingest::{Sentence, TranscriptSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Remote,
    RuleBased,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("analysis provider error: {message}")]
pub struct ProviderError {
    pub message: String,
    pub retryable: bool,
}

impl ProviderError {
    /// Transport failures and timeouts; the call may succeed if repeated.
    pub fn unavailable(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            retryable: true,
        }
    }

    /// Output that violates the structured response contract.
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            retryable: false,
        }
    }
}

/// Backend for the model-facing analyses. Implementations receive only the
/// transcript window the engine chose; the engine validates every answer.
pub trait AnalysisProvider: Send + Sync {
    fn name(&self) -> &str;
    fn kind(&self) -> ProviderKind;

    fn summarize(&self, segments: &[TranscriptSegment]) -> Result<SummaryOutput, ProviderError>;

    fn suggest_followups(
        &self,
        segments: &[TranscriptSegment],
        taxonomy: &Taxonomy,
        max_questions: usize,
    ) -> Result<Vec<String>, ProviderError>;

    fn tag_sentences(
        &self,
        sentences: &[Sentence],
        taxonomy: &Taxonomy,
    ) -> Result<Vec<TaggedSentence>, ProviderError>;

    fn theme_summary(
        &self,
        label: &TagLabel,
        sentences: &[&Sentence],
    ) -> Result<String, ProviderError>;

    /// Score in [-1, 1]; out-of-range values are clamped by the engine.
    fn sentiment(&self, text: &str) -> Result<f64, ProviderError>;
}
