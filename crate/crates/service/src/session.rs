use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use gridscape_core::anomaly::{AnomalyReport, DetectorParams, DetectorRegistry};
use gridscape_core::export::{scene_document, write_csv};
use gridscape_core::ingest::{ingest, IngestOptions, WorkbookFormat};
use gridscape_core::scene::{
    apply_delta, build_scene, rebuild_after_edit, DeltaKind, SceneConfig, SceneError, SceneModel,
};
use gridscape_core::{apply_edit, format_value, select_range, CellAddress, CellGrid, CellRange};
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

use crate::error::ServiceError;
use crate::wire::{DeltaRecord, SyncMessage};

/// Builds the scene for a view, treating a view with nothing to draw as an
/// empty scene rather than an error so sessions survive edits that blank it.
pub fn build_view_scene(grid: &CellGrid, range: CellRange, config: &SceneConfig) -> Result<SceneModel, ServiceError> {
    let view = select_range(grid, range)?;
    match build_scene(&view, config) {
        Ok(scene) => Ok(scene),
        Err(SceneError::EmptyView | SceneError::NoNumericCells) => Ok(SceneModel::empty(config.clone(), range)),
        Err(e) => Err(e.into()),
    }
}

struct State {
    grid: CellGrid,
    range: CellRange,
    config: SceneConfig,
    scene: SceneModel,
    revision: u64,
    subscribers: Vec<(u64, UnboundedSender<SyncMessage>)>,
    next_subscriber: u64,
}

impl State {
    fn snapshot(&self) -> SyncMessage {
        SyncMessage::Snapshot {
            revision: self.revision,
            scene: scene_document(&self.scene),
        }
    }

    fn broadcast(&mut self, msg: &SyncMessage) {
        self.subscribers.retain(|(_, tx)| tx.send(msg.clone()).is_ok());
    }
}

/// A live connection to a session. Messages arrive in broadcast order,
/// starting after `snapshot`.
pub struct Subscription {
    pub id: u64,
    pub snapshot: SyncMessage,
    pub rx: UnboundedReceiver<SyncMessage>,
    /// Feeds the same stream, for replies meant only for this subscriber.
    pub reply: UnboundedSender<SyncMessage>,
}

/// One edited grid with its scene and subscribers. Edits take the write lock,
/// so they are applied one at a time in arrival order; snapshots and
/// selections read under the read lock.
pub struct Session {
    id: String,
    state: RwLock<State>,
}

impl Session {
    pub fn new(
        id: String,
        grid: CellGrid,
        range: Option<CellRange>,
        config: SceneConfig,
    ) -> Result<Self, ServiceError> {
        config.validate()?;
        let range = range.unwrap_or_else(|| grid.full_range());
        let scene = build_view_scene(&grid, range, &config)?;
        Ok(Session {
            id,
            state: RwLock::new(State {
                grid,
                range,
                config,
                scene,
                revision: 0,
                subscribers: Vec::new(),
                next_subscriber: 0,
            }),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    fn read(&self) -> RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|p| p.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|p| p.into_inner())
    }

    pub fn revision(&self) -> u64 {
        self.read().revision
    }

    pub fn range(&self) -> CellRange {
        self.read().range
    }

    pub fn scene(&self) -> SceneModel {
        self.read().scene.clone()
    }

    pub fn grid(&self) -> CellGrid {
        self.read().grid.clone()
    }

    pub fn snapshot(&self) -> SyncMessage {
        self.read().snapshot()
    }

    /// Registers a subscriber and returns the snapshot it starts from. No
    /// delta can slip between the snapshot and the first queued message.
    pub fn subscribe(&self) -> Subscription {
        let mut st = self.write();
        let (tx, rx) = unbounded_channel();
        let id = st.next_subscriber;
        st.next_subscriber += 1;
        st.subscribers.push((id, tx.clone()));
        Subscription {
            id,
            snapshot: st.snapshot(),
            rx,
            reply: tx,
        }
    }

    pub fn unsubscribe(&self, id: u64) {
        self.write().subscribers.retain(|(s, _)| *s != id);
    }

    pub fn subscriber_count(&self) -> usize {
        self.read().subscribers.len()
    }

    /// Applies an edit made against `base_revision` and broadcasts the
    /// resulting delta to every subscriber. Rejected edits leave the session
    /// untouched.
    pub fn handle_edit(&self, addr: CellAddress, raw: &str, base_revision: u64) -> Result<SyncMessage, ServiceError> {
        let mut st = self.write();
        if base_revision != st.revision {
            return Err(ServiceError::StaleRevision {
                current: st.revision,
                got: base_revision,
            });
        }
        if !st.range.contains(addr) {
            return Err(ServiceError::RangeOutOfBounds(format!(
                "cell {addr} is outside the view {}",
                st.range
            )));
        }
        let before = st.grid.get(addr).cloned().expect("view lies inside the grid");
        apply_edit(&mut st.grid, addr, raw)?;
        let next = Self::rescene(&st, addr);
        let (delta, scene) = match next {
            Ok(v) => v,
            Err(e) => {
                st.grid.set(addr, before)?;
                return Err(e);
            }
        };
        st.scene = scene;
        st.revision += 1;
        let msg = SyncMessage::Delta {
            revision: st.revision,
            scene: (delta.kind == DeltaKind::FullRebuild).then(|| scene_document(&st.scene)),
            delta,
        };
        st.broadcast(&msg);
        Ok(msg)
    }

    fn rescene(st: &State, addr: CellAddress) -> Result<(DeltaRecord, SceneModel), ServiceError> {
        let view = select_range(&st.grid, st.range)?;
        let delta = rebuild_after_edit(&st.scene, &view, addr, &st.config)?;
        let scene = match delta.kind {
            DeltaKind::Incremental => apply_delta(&st.scene, &delta)?,
            DeltaKind::FullRebuild => build_view_scene(&st.grid, st.range, &st.config)?,
        };
        Ok((DeltaRecord::from_delta(&delta), scene))
    }

    /// Resolves a selection and broadcasts it with the cell's display text.
    pub fn handle_select_cell(&self, addr: CellAddress) -> Result<SyncMessage, ServiceError> {
        let mut st = self.write();
        if !st.range.contains(addr) {
            return Err(ServiceError::RangeOutOfBounds(format!(
                "cell {addr} is outside the view {}",
                st.range
            )));
        }
        let cell = st.grid.get(addr).expect("view lies inside the grid");
        let msg = SyncMessage::Selection {
            addr,
            value_preview: format_value(&cell.value, cell.format.category),
        };
        st.broadcast(&msg);
        Ok(msg)
    }

    pub fn handle_select_glyph(&self, glyph_id: u32) -> Result<SyncMessage, ServiceError> {
        let addr = self
            .read()
            .scene
            .pick_map
            .addr(glyph_id)
            .ok_or(ServiceError::UnknownGlyph(glyph_id))?;
        self.handle_select_cell(addr)
    }

    /// Dispatches a client message. Server-to-client kinds are rejected.
    pub fn handle_message(&self, msg: SyncMessage) -> Result<SyncMessage, ServiceError> {
        match msg {
            SyncMessage::Edit {
                addr,
                raw,
                base_revision,
            } => self.handle_edit(addr, &raw, base_revision),
            SyncMessage::SelectCell { addr } => self.handle_select_cell(addr),
            SyncMessage::SelectGlyph { glyph_id } => self.handle_select_glyph(glyph_id),
            other => Err(ServiceError::BadRequest(format!(
                "clients may not send '{}' messages",
                other.kind()
            ))),
        }
    }

    pub fn anomalies(
        &self,
        params: &DetectorParams,
        detectors: Option<&[String]>,
    ) -> Result<AnomalyReport, ServiceError> {
        let st = self.read();
        let view = select_range(&st.grid, st.range)?;
        Ok(DetectorRegistry::with_defaults().run(&view, params, detectors)?)
    }
}

/// All live sessions, keyed by an unguessable id.
#[derive(Default)]
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    /// When set, closing a session writes its grid here as `<id>.csv`.
    persist_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(persist_dir: Option<PathBuf>) -> Self {
        SessionStore {
            sessions: RwLock::default(),
            persist_dir,
        }
    }

    pub fn create_session(
        &self,
        workbook: &[u8],
        opts: &IngestOptions,
        range: Option<CellRange>,
        config: SceneConfig,
    ) -> Result<Arc<Session>, ServiceError> {
        let grid = ingest(workbook, WorkbookFormat::sniff(workbook), opts)?.grid;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Arc::new(Session::new(id.clone(), grid, range, config)?);
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id, Arc::clone(&session));
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, ServiceError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn get_snapshot(&self, id: &str) -> Result<SyncMessage, ServiceError> {
        Ok(self.get(id)?.snapshot())
    }

    /// Drops the session and, if configured, writes its grid out. Open
    /// subscriptions end once their queues drain.
    pub fn close(&self, id: &str) -> Result<Option<PathBuf>, ServiceError> {
        let session = self
            .sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .remove(id)
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))?;
        {
            let mut st = session.write();
            st.broadcast(&SyncMessage::Error {
                code: "session_closed".into(),
                detail: format!("session '{id}' was closed"),
            });
            st.subscribers.clear();
        }
        let Some(dir) = &self.persist_dir else {
            return Ok(None);
        };
        let path = dir.join(format!("{id}.csv"));
        std::fs::write(&path, write_csv(&session.grid()))?;
        Ok(Some(path))
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
