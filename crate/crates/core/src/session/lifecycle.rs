use std::fmt;

use serde::{Deserialize, Serialize};

use super::SessionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SessionState {
    Locked,
    Ready,
    Recording,
    Ended,
}

impl SessionState {
    pub const ALL: [SessionState; 4] = [Self::Locked, Self::Ready, Self::Recording, Self::Ended];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Locked => "Locked",
            Self::Ready => "Ready",
            Self::Recording => "Recording",
            Self::Ended => "Ended",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Device-initiated lifecycle events. Unlocking is not an event: it only
/// happens through a granted authentication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionEvent {
    Start,
    Stop,
}

impl SessionEvent {
    pub const ALL: [SessionEvent; 2] = [Self::Start, Self::Stop];
}

impl fmt::Display for SessionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Start => "start",
            Self::Stop => "stop",
        })
    }
}

/// Transition table for device events.
pub fn next_state(state: SessionState, event: SessionEvent) -> Option<SessionState> {
    match (state, event) {
        (SessionState::Ready, SessionEvent::Start) => Some(SessionState::Recording),
        (SessionState::Recording, SessionEvent::Stop) => Some(SessionState::Ended),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub from: SessionState,
    pub to: SessionState,
    pub at_ms: u64,
}

/// Start/stop instants on the device clock, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionClock {
    pub started_at: Option<u64>,
    pub stopped_at: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLifecycle {
    session_id: String,
    state: SessionState,
    history: Vec<StateChange>,
    clock: SessionClock,
}

impl SessionLifecycle {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            state: SessionState::Locked,
            history: Vec::new(),
            clock: SessionClock::default(),
        }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn history(&self) -> &[StateChange] {
        &self.history
    }

    pub fn clock(&self) -> SessionClock {
        self.clock
    }

    pub(crate) fn unlock(&mut self, at_ms: u64) {
        debug_assert_eq!(self.state, SessionState::Locked);
        self.history.push(StateChange {
            from: SessionState::Locked,
            to: SessionState::Ready,
            at_ms,
        });
        self.state = SessionState::Ready;
    }

    pub(crate) fn apply(
        &mut self,
        event: SessionEvent,
        at_ms: u64,
    ) -> Result<SessionState, SessionError> {
        let to = next_state(self.state, event).ok_or_else(|| SessionError::IllegalTransition {
            state: self.state,
            event: event.to_string(),
        })?;
        if event == SessionEvent::Stop {
            let started = self.clock.started_at.unwrap_or(0);
            if at_ms < started {
                return Err(SessionError::Validation(format!(
                    "stop at {at_ms} ms precedes start at {started} ms"
                )));
            }
            self.clock.stopped_at = Some(at_ms);
        } else {
            self.clock.started_at = Some(at_ms);
        }
        self.history.push(StateChange {
            from: self.state,
            to,
            at_ms,
        });
        self.state = to;
        Ok(to)
    }

    /// Elapsed interview time in milliseconds. Runs while recording and is
    /// frozen once ended.
    pub fn elapsed(&self, now_ms: u64) -> Result<u64, SessionError> {
        match (self.state, self.clock.started_at) {
            (SessionState::Recording, Some(start)) => Ok(now_ms.saturating_sub(start)),
            (SessionState::Ended, Some(start)) => {
                Ok(self.clock.stopped_at.unwrap_or(start).saturating_sub(start))
            }
            (state, _) => Err(SessionError::NotStarted(state)),
        }
    }

    /// True when the recorded history is a legal path from `Locked`.
    pub fn history_is_legal(&self) -> bool {
        let mut state = SessionState::Locked;
        for change in &self.history {
            if change.from != state {
                return false;
            }
            let ok = match (change.from, change.to) {
                (SessionState::Locked, SessionState::Ready) => true,
                (from, to) => SessionEvent::ALL
                    .into_iter()
                    .any(|e| next_state(from, e) == Some(to)),
            };
            if !ok {
                return false;
            }
            state = change.to;
        }
        state == self.state
    }
}
