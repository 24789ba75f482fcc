use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pulse_sim::{load_script, run, Pacing, RunOptions, SimError};

/// Interview device emulator.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay a script against a running server.
    Run {
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        server: String,
        /// Wall-clock speed multiplier.
        #[arg(long, default_value_t = 1.0, conflicts_with = "virtual_clock")]
        speed: f64,
        /// Fire events without waiting.
        #[arg(long)]
        virtual_clock: bool,
        /// Seed for the firing jitter.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum random delay added to each event in wall-clock mode.
        #[arg(long, default_value_t = 0)]
        jitter_ms: u64,
        #[arg(long)]
        title: Option<String>,
    },
    /// Check a script without contacting a server.
    Validate {
        #[arg(long)]
        script: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Validate { script } => {
            let s = load_script(&script)?;
            println!(
                "ok: {} events, {} speech lines, {} taps",
                s.events.len(),
                s.speech_count(),
                s.tap_times().len()
            );
            Ok(())
        }
        Command::Run {
            script,
            server,
            speed,
            virtual_clock,
            seed,
            jitter_ms,
            title,
        } => {
            let s = load_script(&script)?;
            let opts = RunOptions {
                server,
                pacing: if virtual_clock || speed.is_infinite() {
                    Pacing::Virtual
                } else {
                    Pacing::Speed(speed)
                },
                seed,
                jitter_ms,
                title,
            };
            let mut stdout = std::io::stdout();
            let report = run(&s, &opts, |frame| {
                let _ = stdout.write_all(frame.as_bytes());
                let _ = stdout.flush();
            })?;
            println!(
                "session {} final snapshot {}",
                report.session_id,
                report
                    .final_snapshot_version
                    .map_or("none".into(), |v| format!("v{v}"))
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pulse-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
