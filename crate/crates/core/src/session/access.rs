use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::audit::{AuditEvent, AuditLog};
use super::lifecycle::{SessionEvent, SessionLifecycle, SessionState};
use super::SessionError;

/// Opaque card token presented at activation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccessCredential(String);

impl AccessCredential {
    pub fn new(uid: impl Into<String>) -> Result<Self, SessionError> {
        let uid = uid.into();
        if uid.trim().is_empty() {
            return Err(SessionError::Validation("credential uid is empty".into()));
        }
        Ok(Self(uid))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Set of uids allowed to operate a device.
///
/// The file form is one uid per line; blank lines and lines starting with
/// `#` are skipped and surrounding whitespace is stripped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Allowlist {
    uids: BTreeSet<String>,
}

impl Allowlist {
    pub fn parse(text: &str) -> Self {
        let uids = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect();
        Self { uids }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, credential: &AccessCredential) -> bool {
        self.uids.contains(credential.as_str())
    }

    pub fn len(&self) -> usize {
        self.uids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uids.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Allowlist {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            uids: iter.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthResult {
    Granted,
    Denied,
}

/// Pure membership check. An empty uid is a validation error, never a denial.
pub fn authenticate(uid: &str, allowlist: &Allowlist) -> Result<AuthResult, SessionError> {
    let credential = AccessCredential::new(uid)?;
    Ok(if allowlist.contains(&credential) {
        AuthResult::Granted
    } else {
        AuthResult::Denied
    })
}

/// The only path by which a session leaves `Locked`. Every decision and
/// every lifecycle transition made through the gate lands in its audit log.
#[derive(Debug, Clone, Default)]
pub struct AccessGate {
    allowlist: Allowlist,
    audit: AuditLog,
}

impl AccessGate {
    pub fn new(allowlist: Allowlist) -> Self {
        Self {
            allowlist,
            audit: AuditLog::default(),
        }
    }

    pub fn with_audit(allowlist: Allowlist, audit: AuditLog) -> Self {
        Self { allowlist, audit }
    }

    pub fn allowlist(&self) -> &Allowlist {
        &self.allowlist
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    /// Checks a credential without a session, as done before one is created.
    /// Denials are audited with no session id.
    pub fn check(&mut self, uid: &str, at_ms: u64) -> Result<AuthResult, SessionError> {
        let result = authenticate(uid, &self.allowlist)?;
        if result == AuthResult::Denied {
            self.audit.record(
                at_ms,
                None,
                AuditEvent::AuthDenied {
                    uid: uid.to_owned(),
                },
            );
        }
        Ok(result)
    }

    /// Authenticates against a session. A grant on a `Locked` session moves
    /// it to `Ready`; a grant on any other state changes nothing.
    pub fn authenticate(
        &mut self,
        session: &mut SessionLifecycle,
        uid: &str,
        at_ms: u64,
    ) -> Result<AuthResult, SessionError> {
        let result = authenticate(uid, &self.allowlist)?;
        let sid = Some(session.session_id().to_owned());
        match result {
            AuthResult::Granted => {
                self.audit.record(
                    at_ms,
                    sid.clone(),
                    AuditEvent::AuthGranted {
                        uid: uid.to_owned(),
                    },
                );
                if session.state() == SessionState::Locked {
                    session.unlock(at_ms);
                    self.audit.record(
                        at_ms,
                        sid,
                        AuditEvent::Transition {
                            from: SessionState::Locked,
                            to: SessionState::Ready,
                        },
                    );
                }
            }
            AuthResult::Denied => {
                self.audit.record(
                    at_ms,
                    sid,
                    AuditEvent::AuthDenied {
                        uid: uid.to_owned(),
                    },
                );
            }
        }
        Ok(result)
    }

    pub fn transition(
        &mut self,
        session: &mut SessionLifecycle,
        event: SessionEvent,
        at_ms: u64,
    ) -> Result<SessionState, SessionError> {
        let from = session.state();
        let to = session.apply(event, at_ms)?;
        self.audit.record(
            at_ms,
            Some(session.session_id().to_owned()),
            AuditEvent::Transition { from, to },
        );
        Ok(to)
    }
}
