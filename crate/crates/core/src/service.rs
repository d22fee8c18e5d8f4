//! HTTP API over a [`ProjectStore`].
//!
//! | method | path | success |
//! |---|---|---|
//! | GET | `/health` | store counts |
//! | GET | `/tasks/next?annotator=ID` | `{"status":"task",...}` or `{"status":"exhausted"}` |
//! | POST | `/tasks/{id}/submit` | acknowledgement with server timestamp |
//! | POST | `/tasks/{id}/skip` | the skipped task |
//! | GET | `/export/{kind}` | JSON, or JSON lines for `annotations` |
//! | POST | `/import` | import report |
//!
//! Errors are `{"error": code, "message": text}`, plus `violations` on 422.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::annotation::UnitLabels;
use crate::corpus::ImportBatch;
use crate::report::ReportOptions;
use crate::store::{ProjectStore, StoreError, TaskPayload};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<ProjectStore>,
    pub report: Arc<ReportOptions>,
}

pub fn router(store: Arc<ProjectStore>, report: ReportOptions) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/tasks/next", get(next_task))
        .route("/tasks/{id}/submit", post(submit))
        .route("/tasks/{id}/skip", post(skip))
        .route("/export/{kind}", get(export))
        .route("/import", post(import))
        .with_state(AppState {
            store,
            report: Arc::new(report),
        })
}

pub struct ApiError(StoreError);

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            StoreError::UnknownAnnotator(_) => (StatusCode::NOT_FOUND, "unknown_annotator"),
            StoreError::UnknownTask(_) => (StatusCode::NOT_FOUND, "unknown_task"),
            StoreError::UnknownExport(_) => (StatusCode::NOT_FOUND, "unknown_export"),
            StoreError::NotOwner { .. } => (StatusCode::FORBIDDEN, "not_owner"),
            StoreError::AlreadySubmitted(_) => (StatusCode::CONFLICT, "already_submitted"),
            StoreError::Skipped(_) => (StatusCode::CONFLICT, "skipped"),
            StoreError::EmptySubmission => (StatusCode::UNPROCESSABLE_ENTITY, "empty_submission"),
            StoreError::Invalid(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_annotation"),
            StoreError::Empty(_) => (StatusCode::CONFLICT, "empty"),
            StoreError::Report(_) => (StatusCode::UNPROCESSABLE_ENTITY, "report"),
            StoreError::Io(_) | StoreError::Corrupt { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "storage")
            }
        };
        let mut body = json!({ "error": code, "message": self.0.to_string() });
        if let StoreError::Invalid(v) = &self.0 {
            body["violations"] = json!(v);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> Result<T, StoreError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => Err(ApiError(StoreError::Io(std::io::Error::other(e.to_string())))),
    }
}

async fn health(State(s): State<AppState>) -> Json<serde_json::Value> {
    let snap = s.store.snapshot();
    Json(json!({
        "status": "ok",
        "annotators": snap.corpus.annotators.len(),
        "sentences": snap.corpus.graphs.len(),
        "translations": snap.corpus.translations.len(),
        "annotations": snap.annotations.len(),
    }))
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

#[derive(Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum NextResponse {
    Task(Box<TaskPayload>),
    Exhausted,
}

async fn next_task(
    State(s): State<AppState>,
    Query(q): Query<NextQuery>,
) -> ApiResult<Json<NextResponse>> {
    Ok(Json(match s.store.next_task(&q.annotator)? {
        Some(p) => NextResponse::Task(Box::new(p)),
        None => NextResponse::Exhausted,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitBody {
    pub annotator: String,
    pub labels: UnitLabels,
}

async fn submit(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<SubmitBody>,
) -> ApiResult<impl IntoResponse> {
    let ack = blocking(move || s.store.submit(&body.annotator, &id, body.labels)).await?;
    Ok(Json(ack))
}

#[derive(Deserialize)]
struct SkipBody {
    annotator: String,
}

async fn skip(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<SkipBody>,
) -> ApiResult<impl IntoResponse> {
    let task = blocking(move || s.store.skip(&body.annotator, &id)).await?;
    Ok(Json(task))
}

async fn export(State(s): State<AppState>, Path(kind): Path<String>) -> ApiResult<Response> {
    let content_type = if kind == "annotations" {
        "application/x-ndjson"
    } else {
        "application/json"
    };
    let body = blocking(move || s.store.export(&kind, &s.report)).await?;
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}

async fn import(
    State(s): State<AppState>,
    Json(batch): Json<ImportBatch>,
) -> ApiResult<impl IntoResponse> {
    let report = blocking(move || s.store.import(batch)).await?;
    Ok(Json(report))
}

/// Bind and serve until ctrl-c.
pub async fn serve(
    store: Arc<ProjectStore>,
    report: ReportOptions,
    listen: &str,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store, report))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
