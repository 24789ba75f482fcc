use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::analysis::{AnalysisSnapshot, Tagging, ThematicReport};
use crate::ingest::TranscriptSegment;
use crate::session::{DisplayMode, SessionLifecycle, SessionState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredAudio {
    pub seq: u64,
    #[serde(with = "base64_bytes")]
    pub data: Vec<u8>,
}

/// Session metadata plus references to every stored artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub id: String,
    pub title: String,
    pub created_at: u64,
    pub lifecycle: SessionLifecycle,
    pub taxonomy_version: u32,
    pub transcription_provider: String,
    pub analysis_provider: String,
    pub sample_rate: u32,
    pub display_mode: Option<DisplayMode>,
    pub segment_count: u64,
    pub snapshot_versions: Vec<u64>,
    pub has_tagging: bool,
    pub has_report: bool,
    pub audio_seqs: Vec<u64>,
}

impl SessionMeta {
    pub fn state(&self) -> SessionState {
        self.lifecycle.state()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub meta: SessionMeta,
    pub segments: Vec<TranscriptSegment>,
    pub snapshots: Vec<AnalysisSnapshot>,
    pub tagging: Option<Tagging>,
    pub report: Option<ThematicReport>,
    pub audio: Vec<StoredAudio>,
}

pub(crate) fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id != super::store::TAXONOMIES
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl SessionRecord {
    pub fn new(meta: SessionMeta) -> Self {
        let mut r = Self {
            meta,
            segments: Vec::new(),
            snapshots: Vec::new(),
            tagging: None,
            report: None,
            audio: Vec::new(),
        };
        r.sync_refs();
        r
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    /// Points the metadata references at the artifacts the record holds.
    pub fn sync_refs(&mut self) {
        self.meta.segment_count = self.segments.len() as u64;
        self.meta.snapshot_versions = self.snapshots.iter().map(|s| s.version).collect();
        self.meta.has_tagging = self.tagging.is_some();
        self.meta.has_report = self.report.is_some();
        self.meta.audio_seqs = self.audio.iter().map(|a| a.seq).collect();
    }

    pub fn latest_snapshot(&self) -> Option<&AnalysisSnapshot> {
        self.snapshots.last()
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        let bad = |m: String| Err(StoreError::Validation(m));
        let m = &self.meta;
        if !valid_id(&m.id) {
            return bad(format!("session id `{}` is not a safe identifier", m.id));
        }
        if m.lifecycle.session_id() != m.id {
            return bad("lifecycle belongs to another session".into());
        }
        if !m.lifecycle.history_is_legal() {
            return bad("state history is not a legal transition sequence".into());
        }
        if m.segment_count != self.segments.len() as u64 {
            return bad(format!(
                "{} segments referenced, {} present",
                m.segment_count,
                self.segments.len()
            ));
        }
        let versions: Vec<u64> = self.snapshots.iter().map(|s| s.version).collect();
        if m.snapshot_versions != versions {
            if let Some(v) = m.snapshot_versions.iter().find(|v| !versions.contains(v)) {
                return bad(format!("dangling snapshot reference {v}"));
            }
            return bad("snapshot references do not match stored snapshots".into());
        }
        if m.has_tagging != self.tagging.is_some() {
            return bad("tagging reference does not match".into());
        }
        if m.has_report != self.report.is_some() {
            return bad("report reference does not match".into());
        }
        let audio: Vec<u64> = self.audio.iter().map(|a| a.seq).collect();
        if m.audio_seqs != audio {
            return bad("audio references do not match stored chunks".into());
        }
        if !audio.windows(2).all(|w| w[0] < w[1]) {
            return bad("audio chunks out of order".into());
        }
        if !self.segments.windows(2).all(|w| w[0].seq < w[1].seq) {
            return bad("segments out of order".into());
        }
        if let Some(s) = self
            .segments
            .iter()
            .find(|s| s.session_id != m.id || s.text.trim().is_empty())
        {
            return bad(format!("segment {} is foreign or empty", s.seq));
        }
        if !self
            .snapshots
            .windows(2)
            .all(|w| w[0].version < w[1].version && w[0].coverage_seq <= w[1].coverage_seq)
        {
            return bad("snapshot versions or coverage not monotone".into());
        }
        if self.snapshots.iter().any(|s| s.session_id != m.id) {
            return bad("snapshot belongs to another session".into());
        }
        if let Some(r) = &self.report {
            if r.session_id != m.id {
                return bad("report belongs to another session".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub session_id: String,
    pub created_at: u64,
    pub title: String,
    pub state: SessionState,
    pub segment_count: u64,
    pub latest_snapshot_version: Option<u64>,
    pub revision: u64,
}

impl IndexEntry {
    pub(crate) fn from_meta(meta: &SessionMeta, revision: u64) -> Self {
        Self {
            session_id: meta.id.clone(),
            created_at: meta.created_at,
            title: meta.title.clone(),
            state: meta.state(),
            segment_count: meta.segment_count,
            latest_snapshot_version: meta.snapshot_versions.last().copied(),
            revision,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ListFilter {
    pub state: Option<SessionState>,
    /// Inclusive lower bound on `created_at`.
    pub created_from: Option<u64>,
    /// Exclusive upper bound on `created_at`.
    pub created_until: Option<u64>,
}

impl ListFilter {
    pub fn accepts(&self, e: &IndexEntry) -> bool {
        self.state.is_none_or(|s| e.state == s)
            && self.created_from.is_none_or(|t| e.created_at >= t)
            && self.created_until.is_none_or(|t| e.created_at < t)
    }
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}
