use gridscape_core::anomaly::AnomalyError;
use gridscape_core::ingest::IngestError;
use gridscape_core::scene::SceneError;
use gridscape_core::GridError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no session '{0}'")]
    UnknownSession(String),
    #[error("edit based on revision {got} but the session is at {current}")]
    StaleRevision { current: u64, got: u64 },
    #[error("{0}")]
    RangeOutOfBounds(String),
    #[error("no glyph with id {0}")]
    UnknownGlyph(u32),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Anomaly(#[from] AnomalyError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("could not persist session: {0}")]
    Persist(#[from] std::io::Error),
}

impl ServiceError {
    /// Stable machine-readable code carried by `error` messages.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::StaleRevision { .. } => "stale_revision",
            ServiceError::RangeOutOfBounds(_) => "range_out_of_bounds",
            ServiceError::UnknownGlyph(_) => "unknown_glyph",
            ServiceError::Ingest(_) => "ingest_error",
            ServiceError::Scene(_) => "scene_error",
            ServiceError::Anomaly(_) => "anomaly_error",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Persist(_) => "persist_error",
        }
    }
}

impl From<GridError> for ServiceError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::RangeOutOfBounds { .. } => ServiceError::RangeOutOfBounds(e.to_string()),
            _ => ServiceError::BadRequest(e.to_string()),
        }
    }
}
