use gridscape_core::export::read_scene_document;
use gridscape_core::export::SceneDocument;
use gridscape_core::scene::{apply_delta, DeltaKind, SceneModel};

use crate::wire::SyncMessage;

/// Client-side copy of a session's scene, advanced by replaying the server's
/// snapshot and deltas in order.
#[derive(Debug, Clone)]
pub struct Replica {
    pub revision: u64,
    pub scene: SceneModel,
}

impl Replica {
    pub fn from_snapshot(msg: &SyncMessage) -> Result<Self, String> {
        match msg {
            SyncMessage::Snapshot { revision, scene } => Ok(Replica {
                revision: *revision,
                scene: load(scene)?,
            }),
            other => Err(format!("expected a snapshot, got {other:?}")),
        }
    }

    /// Applies one delta. Deltas must arrive with consecutive revisions;
    /// selections and errors are ignored.
    pub fn apply(&mut self, msg: &SyncMessage) -> Result<(), String> {
        let SyncMessage::Delta { revision, delta, scene } = msg else {
            return Ok(());
        };
        if *revision != self.revision + 1 {
            return Err(format!("delta for revision {revision} after {}", self.revision));
        }
        self.scene = match (delta.kind, scene) {
            (DeltaKind::Incremental, _) => apply_delta(&self.scene, &delta.to_delta()).map_err(|e| e.to_string())?,
            (DeltaKind::FullRebuild, Some(doc)) => load(doc)?,
            (DeltaKind::FullRebuild, None) => return Err("full rebuild without a scene".into()),
        };
        self.revision = *revision;
        Ok(())
    }
}

fn load(doc: &SceneDocument) -> Result<SceneModel, String> {
    let bytes = serde_json::to_vec(doc).map_err(|e| e.to_string())?;
    read_scene_document(&bytes).map_err(|e| e.to_string())
}
