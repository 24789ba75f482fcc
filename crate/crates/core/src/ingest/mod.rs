//! Transcript ingestion: ordered chunk intake, provider-backed
//! transcription and sentence splitting.

mod chunk;
mod provider;
pub mod script;
mod sentences;

pub use chunk::{AudioChunk, ChunkPayload, ChunkQueue};
pub use provider::{
    transcribe, InlineTextProvider, ProviderCapability, ScriptedProvider, TranscriptionProvider,
    Utterance,
};
pub use sentences::{normalize_whitespace, split_sentences, SentenceSplitter};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::SessionState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    Interviewer,
    Participant,
    Unknown,
}

impl Speaker {
    /// Interviewer speech is context; everything else is analyzed content.
    pub fn is_respondent(self) -> bool {
        self != Speaker::Interviewer
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub segment_id: String,
    pub session_id: String,
    pub seq: u64,
    pub speaker: Speaker,
    pub text: String,
    pub t_start: u64,
    pub t_end: u64,
}

impl TranscriptSegment {
    pub fn id_for(seq: u64) -> String {
        format!("s{seq}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sentence_id: String,
    pub segment_id: String,
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("out-of-order chunk {got}, expected seq {expected}")]
    Sequence { expected: u64, got: u64 },
    #[error("chunks are only accepted while recording, session is {0}")]
    State(SessionState),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("transcription provider failed: {message}")]
    Provider { message: String, retryable: bool },
    #[error("configuration error: {0}")]
    Configuration(String),
}
