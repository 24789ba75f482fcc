use crate::ingest::TranscriptSegment;

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Segments whose speaker is not the interviewer. Analytics run over these.
pub fn respondent_segments(segments: &[TranscriptSegment]) -> Vec<&TranscriptSegment> {
    segments
        .iter()
        .filter(|s| s.speaker.is_respondent())
        .collect()
}

pub(crate) fn truncate_words(text: &str, budget: usize) -> String {
    text.split_whitespace()
        .take(budget)
        .collect::<Vec<_>>()
        .join(" ")
}
