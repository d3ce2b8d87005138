//! Messages exchanged on the sync socket, one JSON object per frame, tagged by
//! `type`.

use gridscape_core::export::{GlyphRecord, SceneDocument};
use gridscape_core::scene::{DeltaKind, GlyphId, SceneDelta};
use gridscape_core::CellAddress;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SyncMessage {
    /// Client to server: replace the raw value of one cell.
    Edit {
        addr: CellAddress,
        raw: String,
        base_revision: u64,
    },
    /// Client to server: the user selected a cell in the grid panel.
    SelectCell { addr: CellAddress },
    /// Client to server: the user picked a glyph in the 3D view.
    SelectGlyph { glyph_id: GlyphId },
    /// Server to clients: the scene change caused by an accepted edit.
    Delta {
        revision: u64,
        delta: DeltaRecord,
        /// The whole new scene when `delta.kind` is `full_rebuild`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scene: Option<SceneDocument>,
    },
    /// Server to clients: a resolved selection with the cell's display text.
    Selection { addr: CellAddress, value_preview: String },
    /// Server to one client: the full scene at `revision`.
    Snapshot { revision: u64, scene: SceneDocument },
    /// Server to one client: the request it sent was rejected.
    Error { code: String, detail: String },
}

/// Wire form of a scene delta, with glyphs in scene-document form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub kind: DeltaKind,
    pub changed: Vec<GlyphRecord>,
    pub removed: Vec<GlyphId>,
    pub reason: String,
}

impl DeltaRecord {
    pub fn from_delta(delta: &SceneDelta) -> Self {
        DeltaRecord {
            kind: delta.kind,
            changed: delta.changed.iter().map(GlyphRecord::from_glyph).collect(),
            removed: delta.removed.clone(),
            reason: delta.reason.clone(),
        }
    }

    pub fn to_delta(&self) -> SceneDelta {
        SceneDelta {
            kind: self.kind,
            changed: self.changed.iter().cloned().map(GlyphRecord::into_glyph).collect(),
            removed: self.removed.clone(),
            reason: self.reason.clone(),
        }
    }
}

impl SyncMessage {
    /// The `type` tag.
    pub fn kind(&self) -> &'static str {
        match self {
            SyncMessage::Edit { .. } => "edit",
            SyncMessage::SelectCell { .. } => "select_cell",
            SyncMessage::SelectGlyph { .. } => "select_glyph",
            SyncMessage::Delta { .. } => "delta",
            SyncMessage::Selection { .. } => "selection",
            SyncMessage::Snapshot { .. } => "snapshot",
            SyncMessage::Error { .. } => "error",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sync messages always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
