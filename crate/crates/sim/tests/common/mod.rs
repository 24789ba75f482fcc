#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use pulse_core::session::Allowlist;
use pulse_server::{Service, ServiceConfig};
use tokio::runtime::Runtime;

pub const CARD: &str = "04A31F22";
pub const READER: &str = "reader-key";
pub const ADMIN: &str = "admin-key";

pub fn script_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scripts")
        .join(name)
}

/// Service settings that make every run reproducible.
pub fn deterministic_config(store: &Path) -> ServiceConfig {
    let mut config = ServiceConfig::new(store, Allowlist::parse(&format!("{CARD}\n")));
    config.reader_key = Some(READER.into());
    config.admin_key = Some(ADMIN.into());
    config.fsync = false;
    config.id_seed = Some(42);
    config.fixed_clock_ms = Some(1_700_000_000_000);
    config
}

/// A server on its own runtime so blocking clients can call it from the test thread.
pub struct Server {
    pub base: String,
    pub service: Arc<Service>,
    runtime: Option<Runtime>,
}

impl Server {
    pub fn start(config: ServiceConfig) -> Self {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .enable_all()
            .build()
            .unwrap();
        let (service, app) = pulse_server::app(config).unwrap();
        let listener = runtime
            .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
            .unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        runtime.spawn(async move { axum::serve(listener, app).await.unwrap() });
        Self {
            base,
            service,
            runtime: Some(runtime),
        }
    }

    pub fn block_on<F: std::future::Future>(&self, f: F) -> F::Output {
        self.runtime.as_ref().unwrap().block_on(f)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
    }
}
