use std::convert::Infallible;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use axum::response::sse::Event;
use futures_util::Stream;
use pulse_core::api::{LiveEvent, LiveEventBody, API_FORMAT_VERSION};
use pulse_core::session::SessionState;
use tokio::sync::watch;

/// Per-session event log. Events are numbered from 1 and kept for the life
/// of the process so a subscriber can resume from any sequence number.
pub struct LiveLog {
    session_id: String,
    events: Mutex<Vec<LiveEvent>>,
    published: watch::Sender<u64>,
    closed: AtomicBool,
}

fn is_final(event: &LiveEvent) -> bool {
    matches!(&event.body, LiveEventBody::StateChanged(c) if c.to == SessionState::Ended)
}

impl LiveLog {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            events: Mutex::new(Vec::new()),
            published: watch::channel(0).0,
            closed: AtomicBool::new(false),
        }
    }

    fn events(&self) -> std::sync::MutexGuard<'_, Vec<LiveEvent>> {
        self.events.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn publish(&self, body: LiveEventBody) -> u64 {
        let mut events = self.events();
        let seq = events.len() as u64 + 1;
        let event = LiveEvent {
            format_version: API_FORMAT_VERSION,
            session_id: self.session_id.clone(),
            seq,
            body,
        };
        let last = is_final(&event);
        events.push(event);
        if last {
            self.closed.store(true, Ordering::SeqCst);
        }
        self.published.send_replace(seq);
        seq
    }

    pub fn last_seq(&self) -> u64 {
        self.events().len() as u64
    }

    /// Events with `seq > after`, in order.
    pub fn since(&self, after: u64) -> Vec<LiveEvent> {
        let events = self.events();
        let from = (after as usize).min(events.len());
        events[from..].to_vec()
    }

    /// True once the stream's final event has been published.
    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }

    /// Every event after `after`, then each new one as it is published.
    /// Ends after the event that moves the session to `Ended`.
    pub fn follow(self: Arc<Self>, after: u64) -> impl Stream<Item = LiveEvent> {
        async_stream::stream! {
            let mut published = self.published.subscribe();
            let mut next = after;
            loop {
                // Read the flag first: once set, `since` is sure to include the final event.
                let closed = self.is_closed();
                for event in self.since(next) {
                    next = event.seq;
                    let last = is_final(&event);
                    yield event;
                    if last {
                        return;
                    }
                }
                if closed {
                    return;
                }
                if published.changed().await.is_err() {
                    return;
                }
            }
        }
    }
}

pub fn to_sse(event: &LiveEvent) -> Result<Event, Infallible> {
    Ok(Event::default()
        .id(event.seq.to_string())
        .event(event.body.kind())
        .data(serde_json::to_string(event).expect("live events serialize")))
}
