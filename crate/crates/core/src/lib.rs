pub mod analysis;
pub mod api;
pub mod ingest;
pub mod session;
pub mod store;
