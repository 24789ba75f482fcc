use std::thread;
use std::time::{Duration, Instant};

use pulse_core::api::GestureOutcome;
use pulse_core::session::{SessionEvent, SessionState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::client::DeviceClient;
use crate::screen::Screen;
use crate::script::{EventKind, SimScript};
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pacing {
    /// Fire events back to back; script times are only sent as device time.
    Virtual,
    /// Fire an event scheduled at `t` ms after `t / speed` ms of wall time.
    Speed(f64),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub server: String,
    pub pacing: Pacing,
    /// Seeds the firing jitter in wall-clock mode.
    pub seed: u64,
    /// Upper bound of the random delay added to each event in wall-clock mode.
    pub jitter_ms: u64,
    pub title: Option<String>,
}

impl RunOptions {
    pub fn virtual_clock(server: impl Into<String>) -> Self {
        Self {
            server: server.into(),
            pacing: Pacing::Virtual,
            seed: 0,
            jitter_ms: 0,
            title: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub session_id: String,
    pub final_snapshot_version: Option<u64>,
    pub final_state: SessionState,
    pub screens: Vec<String>,
}

impl RunReport {
    /// The rendered screens in order, as one document.
    pub fn transcript(&self) -> String {
        self.screens.concat()
    }
}

struct Pacer {
    pacing: Pacing,
    start: Instant,
    rng: ChaCha8Rng,
    jitter_ms: u64,
}

impl Pacer {
    fn wait_for(&mut self, at_ms: u64) {
        let Pacing::Speed(speed) = self.pacing else {
            return;
        };
        let jitter = match self.jitter_ms {
            0 => 0.0,
            j => self.rng.gen_range(0..=j) as f64,
        };
        let due = self.start + Duration::from_secs_f64((at_ms as f64 / speed + jitter) / 1000.0);
        if let Some(left) = due.checked_duration_since(Instant::now()) {
            thread::sleep(left);
        }
    }
}

struct Device<'a, F: FnMut(&str)> {
    client: DeviceClient,
    screen: Screen,
    screens: Vec<String>,
    on_screen: &'a mut F,
    pending_tap: Option<u64>,
    window_ms: u64,
}

impl<F: FnMut(&str)> Device<'_, F> {
    fn show(&mut self) {
        let frame = self.screen.render(self.screens.len());
        (self.on_screen)(&frame);
        self.screens.push(frame);
    }

    fn apply(&mut self, at_ms: u64, outcome: GestureOutcome) {
        self.pending_tap = outcome.pending_tap;
        self.screen.at_ms = at_ms;
        self.screen.elapsed_ms = outcome.elapsed_ms;
        if outcome.gesture.is_none() {
            return;
        }
        self.screen.mode = outcome.mode;
        if let Some(snapshot) = outcome.snapshot {
            self.screen.snapshot = Some(snapshot);
        }
        self.screen.notice = outcome
            .analysis_error
            .map(|e| format!("analysis unavailable ({})", e.code));
        self.show();
    }

    /// Lets a held tap resolve as a single tap once its window has passed
    /// before `next_ms`, as the physical device would on its own.
    fn settle_before(&mut self, next_ms: u64, pacer: &mut Pacer) -> Result<(), SimError> {
        if let Some(tap) = self.pending_tap {
            let due = tap + self.window_ms + 1;
            if due <= next_ms {
                pacer.wait_for(due);
                let outcome = self.client.tick(due)?;
                self.apply(due, outcome);
            }
        }
        Ok(())
    }
}

/// Replays `script` against the server, calling `on_screen` with every
/// rendered frame as it is produced.
pub fn run(
    script: &SimScript,
    opts: &RunOptions,
    mut on_screen: impl FnMut(&str),
) -> Result<RunReport, SimError> {
    if let Pacing::Speed(s) = opts.pacing {
        if !(s.is_finite() && s > 0.0) {
            return Err(SimError::Usage(format!(
                "speed must be a positive number, got {s}"
            )));
        }
    }
    let mut client = DeviceClient::new(&opts.server)?;
    let created = client.swipe(&script.credential, opts.title.clone())?;
    let mut pacer = Pacer {
        pacing: opts.pacing,
        start: Instant::now(),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        jitter_ms: opts.jitter_ms,
    };
    let mut device = Device {
        client,
        screen: Screen {
            session_id: created.session_id.clone(),
            state: created.state,
            at_ms: 0,
            elapsed_ms: None,
            mode: None,
            snapshot: None,
            notice: None,
        },
        screens: Vec::new(),
        on_screen: &mut on_screen,
        pending_tap: None,
        window_ms: created.tap_window_ms,
    };
    device.show();

    let status = device.client.transition(SessionEvent::Start, 0)?;
    device.screen.state = status.state;
    device.screen.elapsed_ms = status.elapsed_ms;
    device.show();

    let mut seq = 0;
    let mut final_snapshot_version = None;
    for (i, event) in script.events.iter().enumerate() {
        device.settle_before(event.at_ms, &mut pacer)?;
        pacer.wait_for(event.at_ms);
        match &event.kind {
            EventKind::Speech { speaker, text } => {
                let t_end = script
                    .events
                    .get(i + 1)
                    .map_or(event.at_ms, |next| next.at_ms);
                device
                    .client
                    .speech(seq, *speaker, text, event.at_ms, t_end)?;
                seq += 1;
            }
            EventKind::Tap => {
                let outcome = device.client.tap(event.at_ms)?;
                device.apply(event.at_ms, outcome);
            }
            EventKind::Stop => {
                let status = device.client.transition(SessionEvent::Stop, event.at_ms)?;
                let shown = device.screen.snapshot.as_ref().map(|s| s.version);
                device.screen.state = status.state;
                device.screen.at_ms = event.at_ms;
                device.screen.elapsed_ms = status.elapsed_ms;
                device.screen.mode = status.display_mode;
                device.screen.notice = match status.latest_snapshot_version {
                    Some(v) if Some(v) != shown => {
                        Some(format!("snapshot v{v} was computed at stop"))
                    }
                    _ => None,
                };
                final_snapshot_version = status.latest_snapshot_version;
                device.show();
            }
        }
    }
    Ok(RunReport {
        session_id: created.session_id,
        final_snapshot_version,
        final_state: device.screen.state,
        screens: device.screens,
    })
}
