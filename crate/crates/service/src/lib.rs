//! Session server: holds an editable grid per session, serves its scene and
//! anomaly report over HTTP, and keeps viewers in sync over a WebSocket.

mod error;
pub mod http;
mod replica;
mod session;
pub mod wire;

pub use error::ServiceError;
pub use replica::Replica;
pub use session::{build_view_scene, Session, SessionStore, Subscription};
pub use wire::{DeltaRecord, SyncMessage};
