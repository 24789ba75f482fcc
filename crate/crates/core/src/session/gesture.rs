use serde::{Deserialize, Serialize};

use super::SessionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gesture {
    SingleTap,
    DoubleTap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisplayMode {
    Summary,
    FollowUps,
}

impl From<Gesture> for DisplayMode {
    fn from(g: Gesture) -> Self {
        match g {
            Gesture::SingleTap => DisplayMode::Summary,
            Gesture::DoubleTap => DisplayMode::FollowUps,
        }
    }
}

/// Maximum gap, inclusive, between two taps that form a double tap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct TapWindow(u64);

impl TapWindow {
    pub const DEFAULT_MS: u64 = 400;

    pub fn new(ms: u64) -> Result<Self, SessionError> {
        if ms == 0 {
            return Err(SessionError::Validation(
                "tap window must be positive".into(),
            ));
        }
        Ok(Self(ms))
    }

    pub fn ms(self) -> u64 {
        self.0
    }
}

impl Default for TapWindow {
    fn default() -> Self {
        Self(Self::DEFAULT_MS)
    }
}

impl TryFrom<u64> for TapWindow {
    type Error = SessionError;
    fn try_from(ms: u64) -> Result<Self, Self::Error> {
        Self::new(ms)
    }
}

impl From<TapWindow> for u64 {
    fn from(w: TapWindow) -> u64 {
        w.0
    }
}

/// Online greedy tap pairing.
///
/// A tap is held until either a successor arrives within the window (double
/// tap) or the clock moves strictly past `tap + window` (single tap).
#[derive(Debug, Clone, Default)]
pub struct TapClassifier {
    window: TapWindow,
    pending: Option<u64>,
    last_seen: Option<u64>,
}

impl TapClassifier {
    pub fn new(window: TapWindow) -> Self {
        Self {
            window,
            pending: None,
            last_seen: None,
        }
    }

    pub fn window(&self) -> TapWindow {
        self.window
    }

    pub fn pending(&self) -> Option<u64> {
        self.pending
    }

    fn observe(&mut self, at: u64) -> Result<(), SessionError> {
        if let Some(last) = self.last_seen {
            if at < last {
                return Err(SessionError::Validation(format!(
                    "timestamp {at} ms precedes {last} ms"
                )));
            }
        }
        self.last_seen = Some(at);
        Ok(())
    }

    /// Feeds one tap. Returns the gesture completed by it, if any: a double
    /// tap when it pairs with the held tap, or the held tap as a single tap
    /// when the gap exceeded the window (the new tap is then held).
    pub fn push(&mut self, at: u64) -> Result<Option<Gesture>, SessionError> {
        self.observe(at)?;
        match self.pending.take() {
            Some(prev) if at - prev <= self.window.ms() => Ok(Some(Gesture::DoubleTap)),
            Some(_) => {
                self.pending = Some(at);
                Ok(Some(Gesture::SingleTap))
            }
            None => {
                self.pending = Some(at);
                Ok(None)
            }
        }
    }

    /// Advances the clock without a tap; resolves an expired held tap.
    pub fn advance(&mut self, now: u64) -> Result<Option<Gesture>, SessionError> {
        self.observe(now)?;
        match self.pending {
            Some(prev) if now - prev > self.window.ms() => {
                self.pending = None;
                Ok(Some(Gesture::SingleTap))
            }
            _ => Ok(None),
        }
    }

    /// Resolves a held tap unconditionally, as at end of input.
    pub fn flush(&mut self) -> Option<Gesture> {
        self.pending.take().map(|_| Gesture::SingleTap)
    }
}

/// Classifies a complete, time-ordered tap sequence. The final unpaired tap
/// counts as a single tap since no successor can follow.
pub fn classify_taps(taps: &[u64], window: TapWindow) -> Result<Vec<Gesture>, SessionError> {
    if let Some(w) = taps.windows(2).find(|w| w[1] < w[0]) {
        return Err(SessionError::Validation(format!(
            "taps not sorted: {} ms after {} ms",
            w[1], w[0]
        )));
    }
    let mut classifier = TapClassifier::new(window);
    let mut out = Vec::with_capacity(taps.len());
    for &at in taps {
        out.extend(classifier.push(at)?);
    }
    out.extend(classifier.flush());
    Ok(out)
}
