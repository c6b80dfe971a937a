//! JSON-over-HTTP session API, mounted under `/v1`.

use std::sync::Arc;

use actriage_core::dataset::Label;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::sessions::{describe, CreateSession, SessionError, SessionManager};

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            SessionError::UnknownDataset(_) => (StatusCode::NOT_FOUND, "unknown_dataset"),
            SessionError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            SessionError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            SessionError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (status, Json(json!({ "error": self.to_string(), "code": code }))).into_response()
    }
}

type AppState = Arc<SessionManager>;

pub fn router(manager: Arc<SessionManager>) -> Router {
    let v1 = Router::new()
        .route("/datasets", get(list_datasets))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next_query))
        .route("/sessions/{id}/labels", post(submit_label))
        .route("/sessions/{id}/progress", get(progress))
        .route("/sessions/{id}/stop", post(stop))
        .route("/sessions/{id}/export", get(export));
    Router::new()
        .nest("/v1", v1)
        .route("/healthz", get(|| async { "ok" }))
        .layer(CorsLayer::permissive())
        .with_state(manager)
}

/// Run blocking engine work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, SessionError>
where
    F: FnOnce() -> Result<T, SessionError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| SessionError::Internal(e.to_string()))?
}

async fn list_datasets(State(m): State<AppState>) -> Result<impl IntoResponse, SessionError> {
    let list = blocking(move || m.datasets().list().map_err(|e| SessionError::Internal(describe(&e)))).await?;
    Ok(Json(list))
}

async fn create_session(
    State(m): State<AppState>,
    body: Result<Json<CreateSession>, axum::extract::rejection::JsonRejection>,
) -> Result<impl IntoResponse, SessionError> {
    let Json(req) = body.map_err(|e| SessionError::BadRequest(e.body_text()))?;
    let handle = blocking(move || m.create(req)).await?;
    Ok((StatusCode::CREATED, Json(handle)))
}

async fn list_sessions(State(m): State<AppState>) -> impl IntoResponse {
    Json(m.list())
}

async fn get_session(State(m): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, SessionError> {
    Ok(Json(m.handle(&id)?))
}

async fn next_query(State(m): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, SessionError> {
    Ok(Json(blocking(move || m.next(&id)).await?))
}

#[derive(Debug, Deserialize)]
pub struct LabelBody {
    pub id: String,
    pub label: Label,
}

async fn submit_label(
    State(m): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<LabelBody>, axum::extract::rejection::JsonRejection>,
) -> Result<impl IntoResponse, SessionError> {
    let Json(body) = body.map_err(|e| SessionError::BadRequest(e.body_text()))?;
    Ok(Json(blocking(move || m.submit(&id, &body.id, body.label)).await?))
}

#[derive(Debug, Deserialize)]
pub struct ProgressQuery {
    pub limit: Option<usize>,
}

async fn progress(
    State(m): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ProgressQuery>,
) -> Result<impl IntoResponse, SessionError> {
    Ok(Json(blocking(move || m.progress(&id, q.limit)).await?))
}

async fn stop(State(m): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, SessionError> {
    Ok(Json(blocking(move || m.stop(&id)).await?))
}

async fn export(State(m): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, SessionError> {
    let csv = m.export_csv(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv))
}
