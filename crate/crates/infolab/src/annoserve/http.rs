//! JSON routes over [`AnnotationService`].
//!
//! Errors are `{"error": kind, "message": text}` with 404 for unknown ids,
//! 400 for invalid input and 409 for protocol or duplicate-score conflicts.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use infolab_core::annotate::{AnnotateError, Measure, Scheme};
use serde::Deserialize;
use serde_json::json;

use super::{export_jsonl, AnnotationService, ServiceError};

pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            kind: "validation",
            message: message.into(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let message = e.to_string();
        let (status, kind) = match &e {
            ServiceError::Annotate(a) => match a {
                AnnotateError::UnknownTaskSet(_)
                | AnnotateError::UnknownSession(_)
                | AnnotateError::UnknownTask(_) => (StatusCode::NOT_FOUND, "not_found"),
                AnnotateError::Conflict { .. } => (StatusCode::CONFLICT, "conflict"),
                AnnotateError::Protocol(_) => (StatusCode::CONFLICT, "protocol"),
                AnnotateError::OutOfRange { .. }
                | AnnotateError::WrongScheme { .. }
                | AnnotateError::BadTask { .. }
                | AnnotateError::InsufficientOverlap { .. }
                | AnnotateError::Stats(_) => (StatusCode::BAD_REQUEST, "validation"),
                AnnotateError::DuplicateTask(_)
                | AnnotateError::DuplicateTaskSet(_)
                | AnnotateError::Replay(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            },
            ServiceError::Io(_) | ServiceError::Log { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        Self {
            status,
            kind,
            message,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"error": self.kind, "message": self.message})),
        )
            .into_response()
    }
}

type Svc = State<Arc<AnnotationService>>;
type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
struct NewSession {
    annotator: String,
    scheme: Scheme,
    task_set: String,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
struct RevealBody {
    task_id: String,
}

#[derive(Deserialize)]
struct ScoreBody {
    task_id: String,
    measure: Measure,
    score: i64,
}

#[derive(Deserialize)]
struct AgreementQuery {
    set: String,
    a: String,
    b: String,
    measure: Measure,
}

#[derive(Deserialize)]
struct ExportQuery {
    set: Option<String>,
}

async fn create_session(
    State(svc): Svc,
    body: Result<Json<NewSession>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(b) = body?;
    let id = svc.create_session(&b.annotator, b.scheme, &b.task_set, b.seed)?;
    Ok((StatusCode::CREATED, Json(json!({"session_id": id}))))
}

async fn next_task(State(svc): Svc, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.next_task(&id)?))
}

async fn reveal(
    State(svc): Svc,
    Path(id): Path<String>,
    body: Result<Json<RevealBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(b) = body?;
    Ok(Json(json!({"target": svc.reveal(&id, &b.task_id)?})))
}

async fn submit_score(
    State(svc): Svc,
    Path(id): Path<String>,
    body: Result<Json<ScoreBody>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(b) = body?;
    Ok(Json(
        json!({"seq": svc.submit_score(&id, &b.task_id, b.measure, b.score)?}),
    ))
}

async fn agreement(
    State(svc): Svc,
    q: Result<Query<AgreementQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = q?;
    Ok(Json(svc.agreement(&q.set, &q.a, &q.b, q.measure)?))
}

async fn export(
    State(svc): Svc,
    q: Result<Query<ExportQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let Query(q) = q?;
    let records = svc.export(q.set.as_deref())?;
    Ok((
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        export_jsonl(&records),
    ))
}

pub fn router(service: Arc<AnnotationService>) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/next", get(next_task))
        .route("/api/sessions/{id}/reveal", post(reveal))
        .route("/api/sessions/{id}/scores", post(submit_score))
        .route("/api/agreement", get(agreement))
        .route("/api/export", get(export))
        .with_state(service)
}

/// Serve until Ctrl-C.
pub async fn serve(
    service: Arc<AnnotationService>,
    addr: std::net::SocketAddr,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
