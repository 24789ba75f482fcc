use super::script::parse_speech_line;
use super::{AudioChunk, ChunkPayload, IngestError, Speaker, TranscriptSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderCapability {
    Streaming,
    Batch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
}

/// Speech-to-text backend. `Ok(None)` means the chunk held no speech.
pub trait TranscriptionProvider: Send + Sync {
    fn name(&self) -> &str;
    fn capability(&self) -> ProviderCapability;
    fn transcribe_chunk(&self, chunk: &AudioChunk) -> Result<Option<Utterance>, IngestError>;
}

/// Replays a transcript script: chunk `seq` maps to line `seq` (0-based),
/// ignoring the audio payload.
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    lines: Vec<Option<Utterance>>,
}

impl ScriptedProvider {
    pub fn parse(script: &str) -> Result<Self, IngestError> {
        let lines = script
            .lines()
            .enumerate()
            .map(|(i, raw)| {
                let line = parse_speech_line(raw).map_err(|e| {
                    IngestError::Configuration(format!("script line {}: {e}", i + 1))
                })?;
                Ok((!line.is_silence()).then(|| Utterance {
                    speaker: line.speaker,
                    text: line.text,
                }))
            })
            .collect::<Result<_, IngestError>>()?;
        Ok(Self { lines })
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

impl TranscriptionProvider for ScriptedProvider {
    fn name(&self) -> &str {
        "scripted"
    }

    fn capability(&self) -> ProviderCapability {
        ProviderCapability::Batch
    }

    fn transcribe_chunk(&self, chunk: &AudioChunk) -> Result<Option<Utterance>, IngestError> {
        usize::try_from(chunk.seq)
            .ok()
            .and_then(|i| self.lines.get(i))
            .cloned()
            .ok_or_else(|| {
                IngestError::Configuration(format!(
                    "script exhausted: chunk {} but script has {} lines",
                    chunk.seq,
                    self.lines.len()
                ))
            })
    }
}

/// Accepts chunks that already carry text; PCM needs a real recognizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct InlineTextProvider;

impl TranscriptionProvider for InlineTextProvider {
    fn name(&self) -> &str {
        "inline"
    }

    fn capability(&self) -> ProviderCapability {
        ProviderCapability::Streaming
    }

    fn transcribe_chunk(&self, chunk: &AudioChunk) -> Result<Option<Utterance>, IngestError> {
        match &chunk.payload {
            ChunkPayload::Text { speaker, text } => {
                let text = text.trim();
                Ok((!text.is_empty()).then(|| Utterance {
                    speaker: *speaker,
                    text: text.to_owned(),
                }))
            }
            ChunkPayload::Pcm { .. } => Err(IngestError::Configuration(
                "inline transcription needs text payloads; configure a recognizer for PCM".into(),
            )),
        }
    }
}

impl TranscriptSegment {
    pub fn from_utterance(
        session_id: &str,
        chunk: &AudioChunk,
        utterance: Utterance,
    ) -> Option<Self> {
        let text = utterance.text.trim();
        if text.is_empty() {
            return None;
        }
        Some(Self {
            segment_id: Self::id_for(chunk.seq),
            session_id: session_id.to_owned(),
            seq: chunk.seq,
            speaker: utterance.speaker,
            text: text.to_owned(),
            t_start: chunk.t_start,
            t_end: chunk.t_end,
        })
    }
}

/// Transcribes an ordered chunk run: one segment per non-silent chunk,
/// carrying the chunk's seq.
pub fn transcribe(
    session_id: &str,
    chunks: &[AudioChunk],
    provider: &dyn TranscriptionProvider,
) -> Result<Vec<TranscriptSegment>, IngestError> {
    if let Some(w) = chunks.windows(2).find(|w| w[1].seq <= w[0].seq) {
        return Err(IngestError::Validation(format!(
            "chunk {} follows chunk {}",
            w[1].seq, w[0].seq
        )));
    }
    let mut out = Vec::with_capacity(chunks.len());
    for chunk in chunks {
        if let Some(u) = provider.transcribe_chunk(chunk)? {
            out.extend(TranscriptSegment::from_utterance(session_id, chunk, u));
        }
    }
    Ok(out)
}
