use std::fmt::Write;

use pulse_core::analysis::AnalysisSnapshot;
use pulse_core::session::{DisplayMode, SessionState};

/// What the device display shows at one moment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Screen {
    pub session_id: String,
    pub state: SessionState,
    pub at_ms: u64,
    pub elapsed_ms: Option<u64>,
    pub mode: Option<DisplayMode>,
    pub snapshot: Option<AnalysisSnapshot>,
    pub notice: Option<String>,
}

fn clock(ms: u64) -> String {
    let s = ms / 1000;
    format!("{:02}:{:02}", s / 60, s % 60)
}

impl Screen {
    /// Renders the fixed plain-text layout. Every frame has the same shape
    /// so transcripts diff line by line.
    pub fn render(&self, frame: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "----- frame {frame:04} @ {} ms -----", self.at_ms);
        let _ = writeln!(out, "session : {}", self.session_id);
        let _ = writeln!(out, "state   : {}", self.state);
        let _ = writeln!(
            out,
            "timer   : {}",
            self.elapsed_ms.map_or("--:--".into(), clock)
        );
        let mode = match self.mode {
            Some(DisplayMode::Summary) => "Summary",
            Some(DisplayMode::FollowUps) => "FollowUps",
            None => "-",
        };
        let _ = writeln!(out, "mode    : {mode}");
        match &self.snapshot {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "snapshot: v{} through seq {}",
                    s.version, s.coverage_seq
                );
            }
            None => {
                let _ = writeln!(out, "snapshot: -");
            }
        }
        match (self.mode, &self.snapshot) {
            (Some(DisplayMode::Summary), Some(s)) => {
                let _ = writeln!(out, "summary : {}", s.summary);
                for point in &s.key_points {
                    let _ = writeln!(out, "  * {point}");
                }
            }
            (Some(DisplayMode::FollowUps), Some(s)) => {
                let _ = writeln!(out, "ask next:");
                for (i, q) in s.follow_up_questions.iter().enumerate() {
                    let _ = writeln!(out, "  {}. {q}", i + 1);
                }
            }
            _ => {
                let _ = writeln!(out, "(tap once for a summary, twice for questions)");
            }
        }
        if let Some(notice) = &self.notice {
            let _ = writeln!(out, "notice  : {notice}");
        }
        out
    }
}
