//! HTTP front end of the validation store.
//!
//! | route | body |
//! |---|---|
//! | `GET /tasks/next?annotator=ID[&split=dev][&practice=false]` | task, or 204 when done |
//! | `GET /tasks/{id}` | task |
//! | `POST /judgments` | judgment in, acknowledgment out |
//! | `GET /progress` | progress counts |
//! | `GET /agreement?annotator=ID` | agreement with the consolidator |
//! | `POST /export?split=dev[&partial=true]` | export summary; files land in the export directory |
//! | `GET /guidelines` | annotation guidelines (Markdown) |
//!
//! Errors are `{"error": kind, "message": text}` with a 4xx/5xx status.

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use linkcoref::io::write_jsonl;
use linkcoref::pipeline::{DatasetSplit, SplitName};
use linkcoref::validation::{Judgment, Store, TaskFilter, TaskId};
use linkcoref::Error;

pub const GUIDELINES: &str = include_str!("../../../docs/validation-guidelines.md");

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    /// Train split to purge on export.
    pub train: Option<Arc<DatasetSplit>>,
    pub export_dir: PathBuf,
}

pub struct ApiError(StatusCode, &'static str, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, kind) = match &e {
            Error::UnknownTask(_) => (StatusCode::NOT_FOUND, "unknown_task"),
            Error::InvalidJudgment(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_judgment"),
            Error::Unjudged { .. } => (StatusCode::CONFLICT, "unjudged_tasks"),
            Error::TaskMismatch(_) => (StatusCode::CONFLICT, "task_mismatch"),
            Error::Config(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1, "message": self.2 }))).into_response()
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
}

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    pub annotator: String,
    #[serde(default)]
    pub split: Option<SplitName>,
    #[serde(default)]
    pub practice: Option<bool>,
}

async fn next_task(State(s): State<AppState>, Query(q): Query<NextQuery>) -> Response {
    let filter = TaskFilter {
        split: q.split,
        practice: q.practice,
    };
    match s.store.next_task(&q.annotator, &filter) {
        Some(t) => Json(t).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

async fn task(State(s): State<AppState>, Path(id): Path<TaskId>) -> Result<Response, ApiError> {
    s.store
        .task(id)
        .map(|t| Json(t).into_response())
        .ok_or(ApiError::from(Error::UnknownTask(id)))
}

async fn submit(State(s): State<AppState>, Json(j): Json<Judgment>) -> Result<Response, ApiError> {
    // the store fsyncs before returning
    let ack = tokio::task::spawn_blocking(move || s.store.submit(j))
        .await
        .map_err(internal)??;
    Ok(Json(ack).into_response())
}

async fn progress(State(s): State<AppState>) -> Response {
    Json(s.store.progress()).into_response()
}

#[derive(Debug, Deserialize)]
pub struct AgreementQuery {
    pub annotator: String,
}

async fn agreement(State(s): State<AppState>, Query(q): Query<AgreementQuery>) -> Result<Response, ApiError> {
    Ok(Json(s.store.agreement(&q.annotator)?).into_response())
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub split: SplitName,
    #[serde(default)]
    pub partial: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExportSummary {
    pub split: SplitName,
    pub candidates: u64,
    pub valid: u64,
    pub rejected: u64,
    pub practice_excluded: u64,
    pub unjudged: Vec<TaskId>,
    pub exported_mentions: u64,
    pub exported_clusters: u64,
    /// Train mentions removed because their source article also has an
    /// evaluation mention.
    pub train_removed: Option<u64>,
    pub files: Vec<String>,
}

fn export_blocking(s: &AppState, q: &ExportQuery) -> Result<ExportSummary, Error> {
    if q.split == SplitName::Train {
        return Err(Error::Config("only dev and test are validated".into()));
    }
    let report = s.store.export_validated(q.split, q.partial)?;
    std::fs::create_dir_all(&s.export_dir)?;
    let mut files = Vec::new();
    let path = s.export_dir.join(format!("{}.jsonl", q.split));
    write_jsonl(&path, report.split.mentions())?;
    files.push(path.display().to_string());
    let mut train_removed = None;
    if let Some(train) = &s.train {
        let (purged, removed) = s.store.purge_train(train);
        let path = s.export_dir.join("train.jsonl");
        write_jsonl(&path, purged.mentions())?;
        files.push(path.display().to_string());
        train_removed = Some(removed as u64);
    }
    Ok(ExportSummary {
        split: q.split,
        candidates: report.candidates,
        valid: report.valid,
        rejected: report.rejected,
        practice_excluded: report.practice_excluded,
        unjudged: report.unjudged,
        exported_mentions: report.split.mention_count() as u64,
        exported_clusters: report.split.chains.len() as u64,
        train_removed,
        files,
    })
}

async fn export(State(s): State<AppState>, Query(q): Query<ExportQuery>) -> Result<Response, ApiError> {
    let summary = tokio::task::spawn_blocking(move || export_blocking(&s, &q))
        .await
        .map_err(internal)??;
    Ok(Json(summary).into_response())
}

async fn guidelines() -> Response {
    ([("content-type", "text/markdown; charset=utf-8")], GUIDELINES).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/tasks/next", get(next_task))
        .route("/tasks/:id", get(task))
        .route("/judgments", post(submit))
        .route("/progress", get(progress))
        .route("/agreement", get(agreement))
        .route("/export", post(export))
        .route("/guidelines", get(guidelines))
        .with_state(state)
}
