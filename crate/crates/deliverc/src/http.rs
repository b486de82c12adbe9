//! JSON API used by the browser client.
//!
//! | route | purpose |
//! |---|---|
//! | `POST /sessions` | start or resume by `studentId`, returns a bearer token |
//! | `GET /sessions/{id}` | HUD state |
//! | `GET /sessions/{id}/task` | the current task, issuing one if needed |
//! | `POST /sessions/{id}/submit` | grade a plain-text C program |
//! | `GET /analytics/export` | participation CSV |
//! | `GET /metrics` | gateway counters |

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use deliverc_core::interp::{ConstraintTag, Diagnostic};
use deliverc_core::{GameState, LocationId, TaskSpec};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::gateway::feedback::{Feedback, Verdict};
use crate::gateway::{MetricsSnapshot, Translation};
use crate::grading::AttemptResult;
use crate::session::events::{SessionRecord, TaskRef};
use crate::session::{SessionError, SessionService};

pub const MAX_SOURCE_BYTES: usize = 64 * 1024;

#[derive(Clone)]
struct AppState {
    service: Arc<SessionService>,
    admin_token: Option<String>,
}

pub fn router(service: Arc<SessionService>, admin_token: Option<String>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(start))
        .route("/sessions/{id}", get(hud))
        .route("/sessions/{id}/task", get(task))
        .route("/sessions/{id}/submit", post(submit))
        .route("/analytics/export", get(export))
        .route("/metrics", get(metrics))
        .layer(DefaultBodyLimit::max(MAX_SOURCE_BYTES))
        .with_state(AppState { service, admin_token })
}

/// HUD fields shown next to the grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub session_id: String,
    pub student_id: String,
    pub level: u8,
    pub task_ordinal: u8,
    pub completed_count: u32,
    pub mistake_count: u32,
    pub last_completed: Option<TaskRef>,
    pub degraded: bool,
    pub finished: bool,
}

impl From<&SessionRecord> for SessionView {
    fn from(r: &SessionRecord) -> Self {
        SessionView {
            session_id: r.session_id.clone(),
            student_id: r.student_id.clone(),
            level: r.level,
            task_ordinal: r.task_ordinal,
            completed_count: r.completed_count,
            mistake_count: r.mistake_count,
            last_completed: r.last_completed,
            degraded: r.degraded,
            finished: r.finished,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StartRequest {
    pub student_id: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StartResponse {
    pub token: String,
    pub resumed: bool,
    pub session: SessionView,
}

/// A task as the student sees it. The reference solution and expected end
/// state stay on the server.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskView {
    pub level: u8,
    pub ordinal: u8,
    pub topic: String,
    pub prompt_text: String,
    pub constraint_tags: BTreeSet<ConstraintTag>,
    pub requirements: Vec<String>,
    pub required_visits: Option<Vec<LocationId>>,
    pub initial_state: GameState,
    pub degraded: bool,
}

impl TaskView {
    pub fn new(task: &TaskSpec, degraded: bool) -> Self {
        TaskView {
            level: task.level,
            ordinal: task.ordinal,
            topic: task.topic().description().into(),
            prompt_text: task.prompt_text.clone(),
            constraint_tags: task.constraint_tags.clone(),
            requirements: task.constraint_tags.iter().map(|t| t.requirement().to_string()).collect(),
            required_visits: task.required_visits.clone(),
            initial_state: GameState::initial(),
            degraded,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubmitResponse {
    pub result: AttemptResult,
    pub verdict: Verdict,
    pub feedback: Feedback,
    pub trace: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub differences: Vec<String>,
    pub translation: Option<Translation>,
    pub session: SessionView,
    pub persisted: bool,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownSession(_) => StatusCode::NOT_FOUND,
            SessionError::InvalidStudent => StatusCode::BAD_REQUEST,
            SessionError::NoActiveTask | SessionError::Finished => StatusCode::CONFLICT,
            SessionError::StorageUnavailable(_) | SessionError::MissingPool(_) => StatusCode::SERVICE_UNAVAILABLE,
            SessionError::Replay(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers.get(header::AUTHORIZATION)?.to_str().ok()?.strip_prefix("Bearer ").map(str::trim)
}

fn authorize(state: &AppState, headers: &HeaderMap, id: &str) -> Result<(), ApiError> {
    let token = bearer(headers).ok_or_else(|| ApiError(StatusCode::UNAUTHORIZED, "missing bearer token".into()))?;
    match state.service.session_for_token(token) {
        None => Err(ApiError(StatusCode::UNAUTHORIZED, "unknown token".into())),
        Some(owner) if owner != id => Err(ApiError(StatusCode::FORBIDDEN, "token belongs to another session".into())),
        Some(_) => Ok(()),
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, SessionError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

async fn start(State(state): State<AppState>, Json(body): Json<StartRequest>) -> Result<Response, ApiError> {
    let service = state.service.clone();
    let started = blocking(move || service.start_or_resume(&body.student_id)).await?;
    let status = if started.resumed { StatusCode::OK } else { StatusCode::CREATED };
    let response = StartResponse { token: started.token, resumed: started.resumed, session: (&started.record).into() };
    Ok((status, Json(response)).into_response())
}

async fn hud(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> Result<Json<SessionView>, ApiError> {
    authorize(&state, &headers, &id)?;
    Ok(Json((&state.service.record(&id)?).into()))
}

async fn task(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap) -> Result<Json<TaskView>, ApiError> {
    authorize(&state, &headers, &id)?;
    let service = state.service.clone();
    let issued = blocking(move || service.issue_task(&id)).await?;
    Ok(Json(TaskView::new(&issued.task, issued.degraded)))
}

async fn submit(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: String,
) -> Result<Json<SubmitResponse>, ApiError> {
    authorize(&state, &headers, &id)?;
    let service = state.service.clone();
    let out = blocking(move || service.submit(&id, &body)).await?;
    Ok(Json(SubmitResponse {
        result: out.result,
        verdict: out.feedback.verdict,
        session: (&out.record).into(),
        feedback: out.feedback,
        trace: out.trace,
        diagnostics: out.diagnostics,
        differences: out.differences,
        translation: out.translation,
        persisted: out.persisted,
    }))
}

async fn export(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, ApiError> {
    if let Some(admin) = &state.admin_token {
        if bearer(&headers) != Some(admin.as_str()) {
            return Err(ApiError(StatusCode::UNAUTHORIZED, "admin token required".into()));
        }
    }
    let service = state.service.clone();
    let csv = blocking(move || service.analytics_export()).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn metrics(State(state): State<AppState>) -> Json<MetricsSnapshot> {
    Json(state.service.gateway().metrics())
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
