//! Request and response documents of the `/v1` HTTP API, shared by the
//! service and its clients. Every response document carries
//! `format_version`.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    AnalysisSnapshot, KeywordStat, LabelDef, Polarity, SentimentScore, TagLabel, ThematicReport,
};
use crate::ingest::{Speaker, TranscriptSegment};
use crate::session::{
    AuditEntry, DisplayMode, Gesture, SessionClock, SessionEvent, SessionState, StateChange,
};
use crate::store::IndexEntry;

pub const API_FORMAT_VERSION: u32 = 1;

/// Stable machine-readable error codes.
pub mod codes {
    pub const INVALID_REQUEST: &str = "invalid_request";
    pub const VALIDATION_ERROR: &str = "validation_error";
    pub const INVALID_CREDENTIAL: &str = "invalid_credential";
    pub const UNAUTHENTICATED: &str = "unauthenticated";
    pub const AUTH_DENIED: &str = "auth_denied";
    pub const FORBIDDEN: &str = "forbidden";
    pub const NOT_FOUND: &str = "not_found";
    pub const METHOD_NOT_ALLOWED: &str = "method_not_allowed";
    pub const SEQUENCE_GAP: &str = "sequence_gap";
    pub const INVALID_STATE: &str = "invalid_state";
    pub const ILLEGAL_TRANSITION: &str = "illegal_transition";
    pub const CONFLICT: &str = "conflict";
    pub const INVALID_TAXONOMY: &str = "invalid_taxonomy";
    pub const UNKNOWN_LABEL: &str = "unknown_label";
    pub const INTEGRITY_ERROR: &str = "integrity_error";
    pub const PAYLOAD_TOO_LARGE: &str = "payload_too_large";
    pub const TRANSCRIPTION_UNAVAILABLE: &str = "transcription_unavailable";
    pub const PROVIDER_UNAVAILABLE: &str = "provider_unavailable";
    pub const PROVIDER_ERROR: &str = "provider_error";
    pub const EMPTY_INPUT: &str = "empty_input";
    pub const STORAGE_ERROR: &str = "storage_error";
    pub const INTERNAL_ERROR: &str = "internal_error";

    pub const ALL: [&str; 22] = [
        INVALID_REQUEST,
        VALIDATION_ERROR,
        INVALID_CREDENTIAL,
        UNAUTHENTICATED,
        AUTH_DENIED,
        FORBIDDEN,
        NOT_FOUND,
        METHOD_NOT_ALLOWED,
        SEQUENCE_GAP,
        INVALID_STATE,
        ILLEGAL_TRANSITION,
        CONFLICT,
        INVALID_TAXONOMY,
        UNKNOWN_LABEL,
        INTEGRITY_ERROR,
        PAYLOAD_TOO_LARGE,
        TRANSCRIPTION_UNAVAILABLE,
        PROVIDER_UNAVAILABLE,
        PROVIDER_ERROR,
        EMPTY_INPUT,
        STORAGE_ERROR,
        INTERNAL_ERROR,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub format_version: u32,
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub credential: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub sample_rate: Option<u32>,
    /// Device clock reading of the swipe, in milliseconds.
    #[serde(default)]
    pub at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub format_version: u32,
    pub session_id: String,
    pub token: String,
    pub state: SessionState,
    pub tap_window_ms: u64,
    pub taxonomy_version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRequest {
    pub event: SessionEvent,
    #[serde(default)]
    pub at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub format_version: u32,
    pub session_id: String,
    pub state: SessionState,
    pub clock: SessionClock,
    pub elapsed_ms: Option<u64>,
    pub display_mode: Option<DisplayMode>,
    pub segment_count: u64,
    pub latest_snapshot_version: Option<u64>,
}

/// Text chunk as sent by a scripted device. Audio chunks travel as raw
/// PCM bodies with the numeric fields in the query string instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextChunkRequest {
    pub seq: u64,
    pub t_start: u64,
    pub t_end: u64,
    #[serde(default)]
    pub speaker: Option<Speaker>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcmChunkQuery {
    pub seq: u64,
    pub t_start: u64,
    pub t_end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkAck {
    pub format_version: u32,
    pub acked_seq: u64,
    pub next_seq: u64,
    /// Absent when the chunk was silence.
    pub segment_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapRequest {
    pub at: u64,
    /// Hold the response until this tap has been classified.
    #[serde(default)]
    pub wait: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TickRequest {
    pub at: u64,
}

/// Result of a tap or tick: any gesture it completed, the display mode
/// and the snapshot produced for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GestureOutcome {
    pub format_version: u32,
    pub gesture: Option<Gesture>,
    /// Timestamp of a tap still waiting for a possible second tap.
    pub pending_tap: Option<u64>,
    pub mode: Option<DisplayMode>,
    pub elapsed_ms: Option<u64>,
    pub snapshot: Option<AnalysisSnapshot>,
    /// Set when the gesture completed but the analysis pass did not.
    pub analysis_error: Option<ErrorDetail>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionList {
    pub format_version: u32,
    pub sessions: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceView {
    pub sentence_id: String,
    pub segment_id: String,
    pub text: String,
    pub labels: Vec<TagLabel>,
    pub polarity: Option<Polarity>,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: TagLabel,
    pub count: u64,
}

/// Interview detail. The analytics fields are filled once the session has
/// ended and are null before.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDetail {
    pub format_version: u32,
    pub session_id: String,
    pub title: String,
    pub created_at: u64,
    pub state: SessionState,
    pub clock: SessionClock,
    pub elapsed_ms: Option<u64>,
    pub taxonomy_version: u32,
    pub display_mode: Option<DisplayMode>,
    pub transcript: Vec<TranscriptSegment>,
    pub snapshot_versions: Vec<u64>,
    pub latest_snapshot: Option<AnalysisSnapshot>,
    pub label_filter: Option<TagLabel>,
    pub sentences: Option<Vec<SentenceView>>,
    pub tag_counts: Option<Vec<LabelCount>>,
    pub keywords: Option<Vec<KeywordStat>>,
    pub sentiment: Option<SentimentScore>,
    pub report: Option<ThematicReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyRequest {
    pub labels: Vec<LabelDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyDoc {
    pub format_version: u32,
    pub version: u32,
    pub labels: Vec<LabelDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportResult {
    pub format_version: u32,
    pub session_id: String,
    pub revision: u64,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditView {
    pub format_version: u32,
    pub entries: Vec<AuditEntry>,
    /// False when some session reached Recording without a prior grant.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum LiveEventBody {
    StateChanged(StateChange),
    TimerTick {
        at_ms: u64,
        elapsed_ms: u64,
    },
    ModeChanged {
        mode: DisplayMode,
        gesture: Gesture,
        at_ms: u64,
    },
    SnapshotReady(AnalysisSnapshot),
}

impl LiveEventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::StateChanged(_) => "state_changed",
            Self::TimerTick { .. } => "timer_tick",
            Self::ModeChanged { .. } => "mode_changed",
            Self::SnapshotReady(_) => "snapshot_ready",
        }
    }
}

/// One entry of a session's live stream. `seq` starts at 1 and increases
/// by one per event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveEvent {
    pub format_version: u32,
    pub session_id: String,
    pub seq: u64,
    #[serde(flatten)]
    pub body: LiveEventBody,
}
