//! Emulator for the interview device: presents a card, streams scripted
//! speech, taps and stops, and renders what the display would show.

pub mod client;
pub mod run;
pub mod screen;
pub mod script;

use thiserror::Error;

pub use run::{run, Pacing, RunOptions, RunReport};
pub use script::{parse, Diagnostic, SimScript};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid script:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Script(Vec<Diagnostic>),
    #[error("cannot read script: {0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error("card rejected: {0}")]
    AuthDenied(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("server error {status} {code}: {message}")]
    Api {
        status: u16,
        code: String,
        message: String,
    },
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl SimError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Script(_) | Self::Io(_) | Self::Usage(_) => 2,
            Self::AuthDenied(_) => 3,
            Self::Network(_) => 4,
            Self::Api { .. } | Self::Protocol(_) => 5,
        }
    }
}

/// Reads and parses a script file.
pub fn load_script(path: &std::path::Path) -> Result<SimScript, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    script::parse(&text).map_err(SimError::Script)
}
