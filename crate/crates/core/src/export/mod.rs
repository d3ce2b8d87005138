//! Writers for the scene document, binary glTF, anomaly reports and CSV.
//! Every writer is a pure function of its input.

mod document;
mod gltf;
mod report;
mod table;

use thiserror::Error;

pub use self::gltf::{srgb_to_linear, write_gltf, write_gltf_with, GltfOptions, BAR_WIDTH, DEFAULT_INSTANCE_CAP};
pub use document::{
    read_scene_document, scene_document, write_scene_document, ConfigRecord, GlyphRecord, SceneDocument, SCHEMA_VERSION,
};
pub use report::{format_sig6, read_report_document, write_report, ReportFormat};
pub use table::write_csv;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("scene has {instances} instances, above the cap of {cap}")]
    SceneTooLarge { instances: usize, cap: usize },
    #[error("unsupported scene document version '{0}'")]
    UnsupportedVersion(String),
    #[error("malformed document: {0}")]
    Document(#[from] serde_json::Error),
    #[error("inconsistent document: {0}")]
    Inconsistent(String),
}
