//! Local session store.
//!
//! Layout under the store root:
//!
//! ```text
//! index.doc                 list view of every committed session
//! audit.log                 access audit trail, one checksummed line per entry
//! taxonomies/<version>.doc  every installed taxonomy (`taxonomies` is not a valid session id)
//! <id>/session.doc          session metadata and artifact references
//! <id>/segments.log         append-only transcript, one checksummed line per segment
//! <id>/snapshots/<version>.doc
//! <id>/tags.doc
//! <id>/report.doc
//! <id>/audio/<seq>.pcm
//! ```
//!
//! A save stages every changed artifact under `.staging/`, then atomically
//! publishes a `.commit` manifest naming the installs. Publishing the
//! manifest is the commit point: opening the store replays a manifest that
//! exists and discards staging that has none, so a reader never observes a
//! half-applied save.

mod archive;
mod docs;
mod fsio;
mod record;
#[allow(clippy::module_inception)]
mod store;

pub use archive::{decode_archive, encode_archive, Bundle};
pub use fsio::FaultPlan;
pub use record::{IndexEntry, ListFilter, SessionMeta, SessionRecord, StoredAudio};
pub use store::{Store, StoreOptions};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("storage error: {0}")]
    Io(String),
    #[error("session {0} not found")]
    NotFound(String),
    #[error("invalid record: {0}")]
    Validation(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("archive integrity check failed: {0}")]
    Integrity(String),
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Io(e.to_string())
    }
}
