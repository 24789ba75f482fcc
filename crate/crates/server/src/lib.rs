//! HTTP service for interview sessions: device intake, live analysis and
//! the reader/admin API.

pub mod auth;
pub mod clock;
pub mod config;
pub mod error;
pub mod live;
pub mod remote;
pub mod routes;
pub mod service;

use std::sync::Arc;

pub use config::{ProviderSelection, ServiceConfig};
pub use service::Service;

/// Opens the service and builds its router.
pub fn app(config: ServiceConfig) -> anyhow::Result<(Arc<Service>, axum::Router)> {
    let service = Arc::new(Service::open(config)?);
    Ok((service.clone(), routes::router(service)))
}
