//! HTTP handlers. Response bodies carry knowledge-base strings verbatim;
//! the only service-made strings are the session id, source tags and
//! error messages.

use std::sync::Arc;

use ataseek_core::ata::{parse_ata_id, AtaId, Level, PathEntry, TaskRecord};
use ataseek_core::eval::Language;
use ataseek_core::index::{CandidateList, CandidateSource, IndexError};
use ataseek_core::rerank::MAX_CANDIDATES;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::sessions::{Outcome, SearchSession, SessionError};
use crate::state::{AppState, Snapshot};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn no_snapshot() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "no index snapshot loaded")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::bad_request(r.body_text())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::UnknownSession(_) => StatusCode::NOT_FOUND,
            SessionError::AlreadyRecorded(_) => StatusCode::CONFLICT,
            SessionError::BeforeSubmission { .. } => StatusCode::BAD_REQUEST,
            SessionError::Log { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/search", post(search))
        .route("/api/task/{ata_id}", get(task))
        .route("/api/outcome", post(outcome))
        .with_state(state)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub snapshot: Option<u64>,
    pub tasks: usize,
    pub reranker: bool,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    let snap = state.current();
    Json(Health {
        snapshot: snap.as_ref().map(|s| s.version),
        tasks: snap.map_or(0, |s| s.index.kb().len()),
        reranker: state.reranker().is_some(),
    })
}

#[derive(Debug, Deserialize)]
pub struct SearchRequest {
    pub query: String,
    #[serde(default)]
    pub lang: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ResultRow {
    pub ata_id: AtaId,
    pub title: String,
    pub path: Vec<PathEntry>,
    pub viewer_locator: String,
    pub rank: usize,
    pub source: CandidateSource,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SearchResponse {
    pub session_id: String,
    pub submitted_at: u64,
    pub results: Vec<ResultRow>,
}

fn parse_language(lang: Option<&str>) -> Language {
    match lang.map(str::trim) {
        None | Some("") => Language::En,
        Some(l) if l.eq_ignore_ascii_case("en") => Language::En,
        Some(l) if l.eq_ignore_ascii_case("ko") => Language::Ko,
        Some(_) => Language::Other,
    }
}

/// Dense candidates, re-ranked when a client is configured.
fn retrieve(state: &AppState, snap: &Snapshot, query: &str) -> Result<CandidateList, IndexError> {
    let dense = snap.index.dense_search_text(query, state.rerank_depth)?;
    Ok(match state.reranker() {
        Some(r) => r.rerank(query, &dense, snap.index.kb()),
        None => dense,
    })
}

fn row(record: &TaskRecord, rank: usize, source: CandidateSource) -> ResultRow {
    ResultRow {
        ata_id: record.task_id,
        title: record.title.clone(),
        path: record.hierarchy_path.clone(),
        viewer_locator: record.viewer_locator.clone(),
        rank,
        source,
    }
}

async fn search(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> ApiResult<SearchResponse> {
    let Json(req) = body?;
    let query = req.query.trim().to_string();
    if query.is_empty() {
        return Err(ApiError::bad_request("query is empty"));
    }
    let k = req.k.unwrap_or(state.display_k);
    if !(1..=MAX_CANDIDATES).contains(&k) {
        return Err(ApiError::bad_request(format!("k must be in 1..={MAX_CANDIDATES}")));
    }
    let snap = state.current().ok_or_else(ApiError::no_snapshot)?;
    let submitted_at = state.clock().now_ms();

    let worker_state = state.clone();
    let worker_snap = snap.clone();
    let worker_query = query.clone();
    let list = tokio::task::spawn_blocking(move || retrieve(&worker_state, &worker_snap, &worker_query))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(|e| match e {
            IndexError::EmptyQuery => ApiError::bad_request(e.to_string()),
            other => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, other.to_string()),
        })?;

    let kb = snap.index.kb();
    let results: Vec<ResultRow> = list
        .entries
        .iter()
        .take(k)
        .map(|c| row(kb.get(&c.task_id).expect("candidates come from this snapshot"), c.rank, list.source))
        .collect();
    let session_id = Uuid::new_v4().to_string();
    state.sessions().open_session(SearchSession {
        session_id: session_id.clone(),
        query_text: query,
        language: parse_language(req.lang.as_deref()),
        submitted_at,
        results_shown: results.iter().map(|r| r.ata_id).collect(),
        outcome: None,
    })?;
    Ok(Json(SearchResponse { session_id, submitted_at, results }))
}

fn task_id(text: &str) -> Result<AtaId, ApiError> {
    let id = parse_ata_id(text).map_err(|e| ApiError::bad_request(e.to_string()))?;
    if id.level() != Level::Task {
        return Err(ApiError::bad_request(format!("{id} is not a task-level id")));
    }
    Ok(id)
}

async fn task(State(state): State<Arc<AppState>>, Path(raw): Path<String>) -> ApiResult<TaskRecord> {
    let id = task_id(&raw)?;
    let snap = state.current().ok_or_else(ApiError::no_snapshot)?;
    let record = snap
        .index
        .kb()
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("task {id} not found")))?;
    Ok(Json(record.clone()))
}

#[derive(Debug, Deserialize)]
pub struct OutcomeRequest {
    pub session_id: String,
    #[serde(default)]
    pub selected_task: Option<String>,
    pub success: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct OutcomeResponse {
    pub session_id: String,
    pub selected_task: Option<AtaId>,
    pub success: bool,
    pub submitted_at: u64,
    pub verified_at: u64,
    pub tct_ms: u64,
}

async fn outcome(
    State(state): State<Arc<AppState>>,
    body: Result<Json<OutcomeRequest>, JsonRejection>,
) -> ApiResult<OutcomeResponse> {
    let Json(req) = body?;
    let selected_task = req.selected_task.as_deref().map(task_id).transpose()?;
    let verified_at = state.clock().now_ms();
    let session = state
        .sessions()
        .record_outcome(&req.session_id, Outcome { selected_task, success: req.success, verified_at })?;
    Ok(Json(OutcomeResponse {
        tct_ms: session.tct_ms().expect("outcome just recorded"),
        session_id: session.session_id,
        selected_task,
        success: req.success,
        submitted_at: session.submitted_at,
        verified_at,
    }))
}
