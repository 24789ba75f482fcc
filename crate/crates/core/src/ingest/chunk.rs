use serde::{Deserialize, Serialize};

use super::{IngestError, Speaker};
use crate::session::SessionState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChunkPayload {
    /// Raw PCM, 16-bit little-endian mono.
    Pcm { data: Vec<u8> },
    /// Already-transcribed speech (scripted mode).
    Text { speaker: Speaker, text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioChunk {
    pub seq: u64,
    pub sample_rate: u32,
    pub t_start: u64,
    pub t_end: u64,
    pub payload: ChunkPayload,
}

impl AudioChunk {
    pub fn text(
        seq: u64,
        speaker: Speaker,
        text: impl Into<String>,
        t_start: u64,
        t_end: u64,
    ) -> Self {
        Self {
            seq,
            sample_rate: 16_000,
            t_start,
            t_end,
            payload: ChunkPayload::Text {
                speaker,
                text: text.into(),
            },
        }
    }
}

/// Per-session intake cursor. Accepted sequence numbers form the gapless
/// prefix `0..n`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChunkQueue {
    next_seq: u64,
}

impl ChunkQueue {
    pub fn resume_at(next_seq: u64) -> Self {
        Self { next_seq }
    }

    pub fn expected(&self) -> u64 {
        self.next_seq
    }

    pub fn last_acked(&self) -> Option<u64> {
        self.next_seq.checked_sub(1)
    }

    /// Validates and acknowledges one chunk. On error the cursor is unchanged.
    pub fn accept(&mut self, state: SessionState, chunk: &AudioChunk) -> Result<u64, IngestError> {
        if state != SessionState::Recording {
            return Err(IngestError::State(state));
        }
        if chunk.seq != self.next_seq {
            return Err(IngestError::Sequence {
                expected: self.next_seq,
                got: chunk.seq,
            });
        }
        if chunk.t_start > chunk.t_end {
            return Err(IngestError::Validation(format!(
                "chunk {} ends ({} ms) before it starts ({} ms)",
                chunk.seq, chunk.t_end, chunk.t_start
            )));
        }
        self.next_seq += 1;
        Ok(chunk.seq)
    }
}
