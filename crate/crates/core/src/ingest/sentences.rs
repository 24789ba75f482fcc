use std::collections::BTreeSet;

use super::{Sentence, TranscriptSegment};

const DEFAULT_ABBREVIATIONS: &str = include_str!("../../config/abbreviations.txt");

const TERMINALS: [char; 3] = ['.', '!', '?'];
const CLOSERS: [char; 6] = ['"', '\'', ')', ']', '\u{201D}', '\u{2019}'];

/// Collapses every whitespace run to one space and trims the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Rule-based splitter: a run of `.`, `!` or `?` (plus closing quotes or
/// brackets) ends a sentence when it is followed by whitespace and an
/// uppercase letter, or by the end of the text. A lone `.` after a listed
/// abbreviation does not end a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSplitter {
    version: u32,
    abbreviations: BTreeSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl SentenceSplitter {
    /// Parses an abbreviation list: one token per line, `#` comments, and
    /// an optional `# version: N` header.
    pub fn from_list(text: &str) -> Self {
        let mut version = 0;
        let mut abbreviations = BTreeSet::new();
        for line in text.lines().map(str::trim) {
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = v.trim().parse().unwrap_or(0);
                }
                continue;
            }
            if !line.is_empty() {
                abbreviations.insert(line.trim_end_matches('.').to_lowercase());
            }
        }
        Self {
            version,
            abbreviations,
        }
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        let word = word.trim_start_matches(|c: char| !c.is_alphanumeric());
        !word.is_empty() && self.abbreviations.contains(&word.to_lowercase())
    }

    /// Splits text into sentence strings. Output sentences are whitespace
    /// normalized; joining them with single spaces gives the normalized input.
    pub fn split_text(&self, text: &str) -> Vec<String> {
        let norm = normalize_whitespace(text);
        let chars: Vec<(usize, char)> = norm.char_indices().collect();
        let n = chars.len();
        let mut out = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < n {
            let c = chars[i].1;
            if !TERMINALS.contains(&c) {
                i += 1;
                continue;
            }
            let mut j = i;
            while j + 1 < n
                && (TERMINALS.contains(&chars[j + 1].1) || CLOSERS.contains(&chars[j + 1].1))
            {
                j += 1;
            }
            let end = chars[j].0 + chars[j].1.len_utf8();
            if j + 1 == n {
                out.push(norm[start..end].to_owned());
                start = norm.len();
                break;
            }
            let splits = chars[j + 1].1 == ' '
                && j + 2 < n
                && chars[j + 2].1.is_uppercase()
                && !(c == '.' && i == j && self.is_abbreviation(word_before(&norm, chars[i].0)));
            if splits {
                out.push(norm[start..end].to_owned());
                start = end + 1;
            }
            i = j + 1;
        }
        if start < norm.len() {
            out.push(norm[start..].to_owned());
        }
        out
    }

    pub fn split(&self, segment: &TranscriptSegment) -> Vec<Sentence> {
        self.split_text(&segment.text)
            .into_iter()
            .enumerate()
            .map(|(index, text)| Sentence {
                sentence_id: format!("{}.{index}", segment.segment_id),
                segment_id: segment.segment_id.clone(),
                index,
                text,
            })
            .collect()
    }
}

fn word_before(text: &str, byte_pos: usize) -> &str {
    let head = &text[..byte_pos];
    match head.rfind(' ') {
        Some(p) => &head[p + 1..],
        None => head,
    }
}

/// Splits with the shipped abbreviation list.
pub fn split_sentences(segment: &TranscriptSegment) -> Vec<Sentence> {
    SentenceSplitter::default().split(segment)
}
