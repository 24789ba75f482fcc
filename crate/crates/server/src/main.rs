use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use pulse_core::analysis::AnalysisConfig;
use pulse_core::session::{Allowlist, TapWindow};
use pulse_server::{ProviderSelection, ServiceConfig};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProviderArg {
    RuleBased,
    Remote,
}

/// Interview session server.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Address to listen on.
    #[arg(long, env = "PULSE_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Session store directory.
    #[arg(long, env = "PULSE_STORE_DIR", default_value = "pulse-data")]
    store: PathBuf,
    /// File with one allowed card UID per line.
    #[arg(long, env = "PULSE_ALLOWLIST")]
    allowlist: PathBuf,
    #[arg(long, env = "PULSE_PROVIDER", value_enum, default_value = "rule-based")]
    provider: ProviderArg,
    #[arg(
        long,
        env = "PULSE_REMOTE_ENDPOINT",
        required_if_eq("provider", "remote")
    )]
    remote_endpoint: Option<String>,
    #[arg(long, env = "PULSE_REMOTE_API_KEY", hide_env_values = true)]
    remote_api_key: Option<String>,
    #[arg(long, env = "PULSE_REMOTE_TIMEOUT_MS", default_value_t = 10_000)]
    remote_timeout_ms: u64,
    /// Directory overriding the built-in lexicons, word lists and prompts.
    #[arg(long, env = "PULSE_RESOURCES")]
    resources: Option<PathBuf>,
    /// JSON file with analysis settings.
    #[arg(long, env = "PULSE_ANALYSIS_CONFIG")]
    analysis_config: Option<PathBuf>,
    #[arg(long, env = "PULSE_TAP_WINDOW_MS", default_value_t = 400)]
    tap_window_ms: u64,
    #[arg(long, env = "PULSE_READER_KEY", hide_env_values = true)]
    reader_key: Option<String>,
    #[arg(long, env = "PULSE_ADMIN_KEY", hide_env_values = true)]
    admin_key: Option<String>,
    /// Keep raw PCM chunks in the store.
    #[arg(long, env = "PULSE_RETAIN_AUDIO")]
    retain_audio: bool,
    /// Transcript script used to transcribe PCM chunks.
    #[arg(long, env = "PULSE_TRANSCRIPT_SCRIPT")]
    transcript_script: Option<PathBuf>,
    /// Seed session ids and tokens for reproducible runs.
    #[arg(long, env = "PULSE_ID_SEED")]
    id_seed: Option<u64>,
    /// Freeze the wall clock at this epoch millisecond value.
    #[arg(long, env = "PULSE_FIXED_CLOCK_MS")]
    fixed_clock_ms: Option<u64>,
    /// Skip fsync on store writes.
    #[arg(long, env = "PULSE_NO_FSYNC")]
    no_fsync: bool,
}

impl Args {
    fn config(self) -> anyhow::Result<ServiceConfig> {
        let allowlist = Allowlist::load(&self.allowlist)
            .with_context(|| format!("reading allowlist {}", self.allowlist.display()))?;
        let analysis = match &self.analysis_config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<AnalysisConfig>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => AnalysisConfig::default(),
        };
        let mut config = ServiceConfig::new(self.store, allowlist);
        config.provider = match self.provider {
            ProviderArg::RuleBased => ProviderSelection::RuleBased,
            ProviderArg::Remote => ProviderSelection::Remote {
                endpoint: self
                    .remote_endpoint
                    .context("--remote-endpoint is required")?,
                api_key: self.remote_api_key,
                timeout: Duration::from_millis(self.remote_timeout_ms),
            },
        };
        config.resources_dir = self.resources;
        config.analysis = analysis;
        config.tap_window = TapWindow::new(self.tap_window_ms)?;
        config.reader_key = self.reader_key;
        config.admin_key = self.admin_key;
        config.retain_audio = self.retain_audio;
        config.transcript_script = self.transcript_script;
        config.id_seed = self.id_seed;
        config.fixed_clock_ms = self.fixed_clock_ms;
        config.fsync = !self.no_fsync;
        Ok(config)
    }
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();
    let args = Args::parse();
    let bind = args.bind;
    let config = args.config()?;
    let (_, app) = tokio::task::spawn_blocking(move || pulse_server::app(config)).await??;
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .with_context(|| format!("binding {bind}"))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    Ok(())
}
