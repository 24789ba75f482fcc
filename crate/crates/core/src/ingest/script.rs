//! Speech-line syntax shared by transcript scripts and device scripts.
//!
//! ```text
//! P: It crashes every morning. @1200
//! I: How often?
//! just text with no speaker
//! ```
//!
//! `I:` marks the interviewer and `P:` the participant; a line without a
//! prefix is attributed to `Unknown`. A trailing `@<ms>` token gives the
//! line's time offset. A blank line is silence.

use super::Speaker;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeechLine {
    pub speaker: Speaker,
    pub text: String,
    pub at_ms: Option<u64>,
}

impl SpeechLine {
    pub fn is_silence(&self) -> bool {
        self.text.is_empty()
    }
}

/// Splits a trailing `@<ms>` token off `line`.
///
/// Returns the remaining text and the timestamp. A last token that starts
/// with `@` but is not followed by digits is an error.
pub fn split_timing(line: &str) -> Result<(&str, Option<u64>), String> {
    let trimmed = line.trim_end();
    let (head, last) = match trimmed.rfind(char::is_whitespace) {
        Some(pos) => (&trimmed[..pos], &trimmed[pos + 1..]),
        None => ("", trimmed),
    };
    let Some(digits) = last.strip_prefix('@') else {
        return Ok((trimmed, None));
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("malformed timestamp `{last}`"));
    }
    let ms = digits
        .parse::<u64>()
        .map_err(|_| format!("timestamp `{last}` out of range"))?;
    Ok((head, Some(ms)))
}

pub fn parse_speech_line(line: &str) -> Result<SpeechLine, String> {
    let (body, at_ms) = split_timing(line)?;
    let body = body.trim();
    let (speaker, text) = if let Some(rest) = body.strip_prefix("I:") {
        (Speaker::Interviewer, rest)
    } else if let Some(rest) = body.strip_prefix("P:") {
        (Speaker::Participant, rest)
    } else {
        (Speaker::Unknown, body)
    };
    Ok(SpeechLine {
        speaker,
        text: text.trim().to_owned(),
        at_ms,
    })
}
