use std::path::PathBuf;
use std::time::Duration;

use pulse_core::analysis::AnalysisConfig;
use pulse_core::session::{Allowlist, TapWindow};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSelection {
    RuleBased,
    Remote {
        endpoint: String,
        api_key: Option<String>,
        timeout: Duration,
    },
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub store_dir: PathBuf,
    pub allowlist: Allowlist,
    pub provider: ProviderSelection,
    /// Directory with `abbreviations.txt`, `stopwords.txt`, `lexicons/` and
    /// `prompts/`. The built-in copies are used when unset.
    pub resources_dir: Option<PathBuf>,
    pub analysis: AnalysisConfig,
    pub tap_window: TapWindow,
    pub reader_key: Option<String>,
    pub admin_key: Option<String>,
    /// Keep raw PCM chunks next to the transcript.
    pub retain_audio: bool,
    /// Script used to transcribe PCM chunks. Text chunks need none.
    pub transcript_script: Option<PathBuf>,
    /// Seed for session ids and tokens; random when unset.
    pub id_seed: Option<u64>,
    /// Freeze the service wall clock, for reproducible documents.
    pub fixed_clock_ms: Option<u64>,
    pub fsync: bool,
    pub default_sample_rate: u32,
    pub max_body_bytes: usize,
}

impl ServiceConfig {
    pub fn new(store_dir: impl Into<PathBuf>, allowlist: Allowlist) -> Self {
        Self {
            store_dir: store_dir.into(),
            allowlist,
            provider: ProviderSelection::RuleBased,
            resources_dir: None,
            analysis: AnalysisConfig::default(),
            tap_window: TapWindow::default(),
            reader_key: None,
            admin_key: None,
            retain_audio: false,
            transcript_script: None,
            id_seed: None,
            fixed_clock_ms: None,
            fsync: true,
            default_sample_rate: 16_000,
            max_body_bytes: 4 * 1024 * 1024,
        }
    }
}
