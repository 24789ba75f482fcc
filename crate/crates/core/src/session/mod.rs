//! Interview session lifecycle: credential-gated activation, the
//! `Locked -> Ready -> Recording -> Ended` state machine, tap-gesture
//! classification and the session timer.

mod access;
mod audit;
mod gesture;
mod lifecycle;

pub use access::{authenticate, AccessCredential, AccessGate, Allowlist, AuthResult};
pub use audit::{AuditEntry, AuditEvent, AuditLog, AuditViolation};
pub use gesture::{classify_taps, DisplayMode, Gesture, TapClassifier, TapWindow};
pub use lifecycle::{SessionClock, SessionEvent, SessionLifecycle, SessionState, StateChange};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("cannot apply {event} while session is {state}")]
    IllegalTransition { state: SessionState, event: String },
    #[error("operation requires a recording or ended session, session is {0}")]
    NotStarted(SessionState),
}
