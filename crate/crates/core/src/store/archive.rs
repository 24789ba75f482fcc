use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::docs::FORMAT_VERSION;
use super::record::SessionRecord;
use super::StoreError;
use crate::analysis::PromptTemplate;

const MAGIC: &str = "PULSE-BUNDLE 1";

/// A self-contained session export: the full record plus the prompt
/// templates that produced its analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub format_version: u32,
    /// Set when the session had not ended at export time.
    pub partial: bool,
    pub record: SessionRecord,
    pub prompt_templates: Vec<PromptTemplate>,
}

impl Bundle {
    pub fn new(
        record: SessionRecord,
        prompt_templates: Vec<PromptTemplate>,
        partial: bool,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            partial,
            record,
            prompt_templates,
        }
    }
}

/// Archive bytes: a magic line, a `sha256 <hex>` line over the payload, then
/// the JSON payload.
pub fn encode_archive(bundle: &Bundle) -> Vec<u8> {
    let payload = serde_json::to_vec_pretty(bundle).expect("bundles serialize");
    let mut out = format!(
        "{MAGIC}\nsha256 {}\n",
        hex::encode(Sha256::digest(&payload))
    )
    .into_bytes();
    out.extend_from_slice(&payload);
    out
}

pub fn decode_archive(bytes: &[u8]) -> Result<Bundle, StoreError> {
    let bad = |m: &str| StoreError::Integrity(m.to_string());
    let mut parts = bytes.splitn(3, |&b| b == b'\n');
    let magic = parts.next().ok_or_else(|| bad("empty archive"))?;
    if magic != MAGIC.as_bytes() {
        return Err(bad("not a session archive"));
    }
    let sum_line = parts.next().ok_or_else(|| bad("missing checksum"))?;
    let payload = parts.next().ok_or_else(|| bad("missing payload"))?;
    let expected = std::str::from_utf8(sum_line)
        .ok()
        .and_then(|l| l.strip_prefix("sha256 "))
        .ok_or_else(|| bad("malformed checksum line"))?;
    if hex::encode(Sha256::digest(payload)) != expected {
        return Err(bad("checksum mismatch"));
    }
    let bundle: Bundle = serde_json::from_slice(payload)
        .map_err(|e| StoreError::Integrity(format!("payload: {e}")))?;
    if bundle.format_version != FORMAT_VERSION {
        return Err(StoreError::Integrity(format!(
            "unsupported format version {}",
            bundle.format_version
        )));
    }
    bundle
        .record
        .validate()
        .map_err(|e| StoreError::Integrity(e.to_string()))?;
    Ok(bundle)
}
