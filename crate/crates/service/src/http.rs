use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use gridscape_core::anomaly::DetectorParams;
use gridscape_core::export::{write_report, ReportFormat};
use gridscape_core::ingest::IngestOptions;
use gridscape_core::scene::SceneConfig;
use gridscape_core::{Axis, CellRange};
use serde::Deserialize;
use serde_json::json;

use crate::error::ServiceError;
use crate::session::{Session, SessionStore, Subscription};
use crate::wire::SyncMessage;

pub type AppState = Arc<SessionStore>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::StaleRevision { .. } => StatusCode::CONFLICT,
            ServiceError::Persist(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ServiceError::Ingest(_) | ServiceError::Scene(_) | ServiceError::Anomaly(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::BAD_REQUEST,
        };
        (status, Json(error_message(&self))).into_response()
    }
}

fn error_message(e: &ServiceError) -> SyncMessage {
    SyncMessage::Error {
        code: e.code().to_string(),
        detail: e.to_string(),
    }
}

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(close_session))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/anomalies", get(anomalies))
        .route("/sessions/{id}/sync", get(sync))
        .with_state(store)
}

/// Serves until the listener fails or the future is dropped.
pub async fn serve(listener: tokio::net::TcpListener, store: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(store)).await
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await
}

fn bad(field: &str, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::BadRequest(format!("field '{field}': {e}"))
}

/// Multipart fields: `workbook` (required file), and optionally `sheet`,
/// `delimiter`, `range`, `mode`, `normalize`, `signed`, `hmax`, `pitch`.
async fn create_session(State(store): State<AppState>, mut form: Multipart) -> Result<Response, ServiceError> {
    let mut workbook = None;
    let mut opts = IngestOptions::default();
    let mut range: Option<CellRange> = None;
    let mut config = SceneConfig::default();
    while let Some(field) = form.next_field().await.map_err(|e| bad("multipart", e))? {
        let name = field.name().unwrap_or_default().to_string();
        if name == "workbook" {
            workbook = Some(field.bytes().await.map_err(|e| bad("workbook", e))?);
            continue;
        }
        let text = field.text().await.map_err(|e| bad(&name, e))?;
        let text = text.trim();
        match name.as_str() {
            "sheet" => opts.sheet_name = Some(text.to_string()),
            "delimiter" => {
                let mut chars = text.chars();
                opts.csv_delimiter = match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => return Err(bad("delimiter", "expected one character")),
                }
            }
            "range" => range = Some(text.parse().map_err(|e| bad("range", e))?),
            "mode" => config.glyph_mode = text.parse().map_err(|e| bad("mode", e))?,
            "normalize" => config.policy.mode = text.parse().map_err(|e| bad("normalize", e))?,
            "signed" => config.policy.signed_baseline = text.parse().map_err(|e| bad("signed", e))?,
            "hmax" => config.policy.height_max = text.parse().map_err(|e| bad("hmax", e))?,
            "pitch" => config.cell_pitch = text.parse().map_err(|e| bad("pitch", e))?,
            _ => return Err(bad(&name, "unknown field")),
        }
    }
    let workbook = workbook.ok_or_else(|| bad("workbook", "missing"))?;
    let session = store.create_session(&workbook, &opts, range, config)?;
    let body = json!({
        "session_id": session.id(),
        "revision": session.revision(),
        "range": session.range(),
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn snapshot(State(store): State<AppState>, Path(id): Path<String>) -> Result<Json<SyncMessage>, ServiceError> {
    Ok(Json(store.get_snapshot(&id)?))
}

#[derive(Debug, Deserialize)]
struct AnomalyQuery {
    z: Option<f64>,
    axis: Option<String>,
    tab_run: Option<usize>,
    window: Option<usize>,
    isolation_z: Option<f64>,
    /// Comma-separated detector names.
    detectors: Option<String>,
}

async fn anomalies(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<AnomalyQuery>,
) -> Result<Response, ServiceError> {
    let session = store.get(&id)?;
    let mut params = DetectorParams::default();
    if let Some(z) = q.z {
        params.z_threshold = z;
    }
    if let Some(axis) = &q.axis {
        params.series_axis = Some(axis.parse::<Axis>().map_err(ServiceError::BadRequest)?);
    }
    if let Some(n) = q.tab_run {
        params.tab_min_run = n;
    }
    if let Some(r) = q.window {
        params.window_radius = r;
    }
    if let Some(z) = q.isolation_z {
        params.isolation_z = z;
    }
    let names: Option<Vec<String>> = q.detectors.map(|d| {
        d.split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect()
    });
    let report = session.anomalies(&params, names.as_deref())?;
    let body = write_report(&report, ReportFormat::Document);
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn close_session(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ServiceError> {
    let persisted = store.close(&id)?;
    Ok(Json(json!({ "closed": id, "persisted": persisted })))
}

async fn sync(
    State(store): State<AppState>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ServiceError> {
    let session = store.get(&id)?;
    Ok(ws.on_upgrade(move |socket| run_socket(socket, session)))
}

/// One task per connection: the snapshot goes out first, then broadcasts in
/// order. Rejected requests are answered with an `error` message on this
/// socket only.
async fn run_socket(socket: WebSocket, session: Arc<Session>) {
    let Subscription {
        id: sub_id,
        snapshot,
        rx: mut queue,
        reply,
    } = session.subscribe();
    let (mut tx, mut rx) = socket.split();
    if tx.send(Message::Text(snapshot.to_json().into())).await.is_err() {
        session.unsubscribe(sub_id);
        return;
    }
    let writer = tokio::spawn(async move {
        while let Some(msg) = queue.recv().await {
            if tx.send(Message::Text(msg.to_json().into())).await.is_err() {
                break;
            }
        }
        let _ = tx.close().await;
    });
    while let Some(Ok(frame)) = rx.next().await {
        let text = match frame {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let result = SyncMessage::from_json(&text)
            .map_err(|e| ServiceError::BadRequest(format!("unreadable message: {e}")))
            .and_then(|msg| session.handle_message(msg));
        if let Err(e) = result {
            if reply.send(error_message(&e)).is_err() {
                break;
            }
        }
    }
    // the queue ends once both the session's sender and ours are gone
    session.unsubscribe(sub_id);
    drop(reply);
    let _ = writer.await;
}
