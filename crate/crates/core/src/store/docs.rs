use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::record::{IndexEntry, SessionMeta};
use super::StoreError;
use crate::ingest::TranscriptSegment;

pub(crate) const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct SessionDoc {
    pub format_version: u32,
    pub revision: u64,
    pub meta: SessionMeta,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct Doc<T> {
    pub format_version: u32,
    pub body: T,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct IndexDoc {
    pub format_version: u32,
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub(crate) enum Op {
    /// Move a staged file over its target.
    Install {
        staged: String,
        target: String,
    },
    /// Cut the segment log back to `base_len`, then append the staged tail.
    AppendLog {
        staged: String,
        base_len: u64,
    },
    Remove {
        target: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct Manifest {
    pub format_version: u32,
    pub revision: u64,
    pub ops: Vec<Op>,
}

pub(crate) fn to_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("store documents serialize");
    out.push(b'\n');
    out
}

pub(crate) fn encode_doc<T: Serialize>(body: &T) -> Vec<u8> {
    to_bytes(&Doc {
        format_version: FORMAT_VERSION,
        body,
    })
}

pub(crate) fn parse<T: DeserializeOwned>(bytes: &[u8], what: &str) -> Result<T, StoreError> {
    serde_json::from_slice(bytes).map_err(|e| StoreError::Corrupt(format!("{what}: {e}")))
}

pub(crate) fn decode_doc<T: DeserializeOwned>(bytes: &[u8], what: &str) -> Result<T, StoreError> {
    let doc: Doc<T> = parse(bytes, what)?;
    check_version(doc.format_version, what)?;
    Ok(doc.body)
}

pub(crate) fn check_version(v: u32, what: &str) -> Result<(), StoreError> {
    if v != FORMAT_VERSION {
        return Err(StoreError::Corrupt(format!(
            "{what}: unsupported format version {v}"
        )));
    }
    Ok(())
}

fn checksum(payload: &[u8]) -> String {
    hex::encode(&Sha256::digest(payload)[..8])
}

/// One log line: a 16-digit hex checksum of the JSON payload, a space, the payload.
pub(crate) fn encode_line<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("log entries serialize");
    format!("{} {json}\n", checksum(json.as_bytes()))
}

/// Parses up to `limit` complete, checksummed lines. Returns the entries and
/// the byte length they span; a torn or damaged line ends the scan.
pub(crate) fn decode_lines<T: DeserializeOwned>(bytes: &[u8], limit: usize) -> (Vec<T>, u64) {
    let mut out = Vec::new();
    let mut consumed = 0usize;
    for line in bytes.split_inclusive(|&b| b == b'\n').take(limit) {
        let Some(body) = line.strip_suffix(b"\n") else {
            break;
        };
        let Ok(text) = std::str::from_utf8(body) else {
            break;
        };
        let Some((sum, json)) = text.split_once(' ') else {
            break;
        };
        if checksum(json.as_bytes()) != sum {
            break;
        }
        let Ok(value) = serde_json::from_str(json) else {
            break;
        };
        out.push(value);
        consumed += line.len();
    }
    (out, consumed as u64)
}

pub(crate) fn segment_lines(segments: &[TranscriptSegment]) -> String {
    segments.iter().map(encode_line).collect()
}
