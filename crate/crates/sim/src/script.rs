//! Device scripts: a `CARD <uid>` line followed by timed events.
//!
//! ```text
//! CARD 04:A3:1F:22
//! I: What slows you down? @0
//! P: Search never finds anything. @2500
//! TAP @4000
//! STOP @9000
//! ```
//!
//! Speech lines use the transcript script syntax and must carry `@<ms>`.
//! Lines starting with `#` and blank lines are ignored.

use std::fmt;

use pulse_core::ingest::script::{parse_speech_line, split_timing};
use pulse_core::ingest::Speaker;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Speech { speaker: Speaker, text: String },
    Tap,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEvent {
    /// 1-based line number in the script file.
    pub line: usize,
    pub at_ms: u64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimScript {
    pub credential: String,
    pub events: Vec<ScriptEvent>,
}

impl SimScript {
    pub fn speech_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Speech { .. }))
            .count()
    }

    pub fn tap_times(&self) -> Vec<u64> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Tap)
            .map(|e| e.at_ms)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn timed(rest: &str, what: &str) -> Result<u64, String> {
    match split_timing(rest)? {
        ("", Some(ms)) => Ok(ms),
        (_, None) => Err(format!("{what} needs an `@<ms>` time")),
        (extra, Some(_)) => Err(format!("unexpected text `{}` after {what}", extra.trim())),
    }
}

fn parse_event(line: &str) -> Result<(u64, EventKind), String> {
    let keyword = line.split_whitespace().next().unwrap_or("");
    match keyword {
        "TAP" => Ok((timed(line[3..].trim(), "TAP")?, EventKind::Tap)),
        "STOP" => Ok((timed(line[4..].trim(), "STOP")?, EventKind::Stop)),
        _ => {
            let speech = parse_speech_line(line)?;
            let at = speech.at_ms.ok_or("speech line needs an `@<ms>` time")?;
            if speech.is_silence() {
                return Err("speech line has no text".into());
            }
            Ok((
                at,
                EventKind::Speech {
                    speaker: speech.speaker,
                    text: speech.text,
                },
            ))
        }
    }
}

/// Parses and checks a script, collecting every problem found.
pub fn parse(text: &str) -> Result<SimScript, Vec<Diagnostic>> {
    let mut diagnostics = Vec::new();
    let mut credential: Option<(usize, String)> = None;
    let mut events: Vec<ScriptEvent> = Vec::new();
    let mut stop_line: Option<usize> = None;

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut diag = |message: String| diagnostics.push(Diagnostic { line, message });
        if let Some(uid) = trimmed.strip_prefix("CARD") {
            let uid = uid.trim();
            match &credential {
                Some((first, _)) => diag(format!(
                    "second CARD line; the credential was set on line {first}"
                )),
                None if !events.is_empty() => diag("CARD must come before any event".into()),
                None if uid.is_empty() => diag("CARD needs a credential".into()),
                None => credential = Some((line, uid.to_string())),
            }
            continue;
        }
        if credential.is_none() && events.is_empty() {
            diag("missing CARD line before the first event".into());
        }
        match parse_event(trimmed) {
            Ok((at_ms, kind)) => {
                if let Some(stop) = stop_line {
                    diag(format!("event after STOP on line {stop}"));
                }
                if let Some(prev) = events.last() {
                    if at_ms < prev.at_ms {
                        diag(format!(
                            "event at {at_ms} ms is earlier than the event on line {} at {} ms",
                            prev.line, prev.at_ms
                        ));
                    }
                }
                if kind == EventKind::Stop {
                    stop_line.get_or_insert(line);
                }
                events.push(ScriptEvent { line, at_ms, kind });
            }
            Err(message) => diag(message),
        }
    }
    let end = text.lines().count().max(1);
    if credential.is_none() && events.is_empty() {
        diagnostics.push(Diagnostic {
            line: end,
            message: "missing CARD line".into(),
        });
    }
    if stop_line.is_none() {
        diagnostics.push(Diagnostic {
            line: end,
            message: "script has no STOP line".into(),
        });
    }
    match (credential, diagnostics.is_empty()) {
        (Some((_, credential)), true) => Ok(SimScript { credential, events }),
        _ => Err(diagnostics),
    }
}
