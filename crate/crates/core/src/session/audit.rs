use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lifecycle::SessionState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuditEvent {
    AuthGranted {
        uid: String,
    },
    AuthDenied {
        uid: String,
    },
    Transition {
        from: SessionState,
        to: SessionState,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub at_ms: u64,
    pub session_id: Option<String>,
    #[serde(flatten)]
    pub event: AuditEvent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditViolation {
    pub index: usize,
    pub session_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditLog {
    entries: Vec<AuditEntry>,
}

impl AuditLog {
    pub fn from_entries(entries: Vec<AuditEntry>) -> Self {
        Self { entries }
    }

    pub fn record(&mut self, at_ms: u64, session_id: Option<String>, event: AuditEvent) {
        self.entries.push(AuditEntry {
            at_ms,
            session_id,
            event,
        });
    }

    pub fn entries(&self) -> &[AuditEntry] {
        &self.entries
    }

    /// Finds the first transition into `Recording` not preceded by a granted
    /// authentication for the same session.
    pub fn verify(&self) -> Result<(), AuditViolation> {
        let mut granted = BTreeSet::new();
        for (index, entry) in self.entries.iter().enumerate() {
            let Some(sid) = &entry.session_id else {
                continue;
            };
            match &entry.event {
                AuditEvent::AuthGranted { .. } => {
                    granted.insert(sid.as_str());
                }
                AuditEvent::Transition {
                    to: SessionState::Recording,
                    ..
                } if !granted.contains(sid.as_str()) => {
                    return Err(AuditViolation {
                        index,
                        session_id: sid.clone(),
                    });
                }
                _ => {}
            }
        }
        Ok(())
    }
}
