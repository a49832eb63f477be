//! JSON-over-HTTP survey API.
//!
//! - `POST /sessions` → `{session_id}`
//! - `GET /sessions/{id}/next` → question; 410 once the session is done
//! - `POST /sessions/{id}/answers` → `{accepted, next_phase}`; 422 with the
//!   offending `field` on rejection
//! - `GET /export?format=csv|jsonl|bundle` → completed sessions; requires
//!   `Authorization: Bearer <token>` when an admin token is configured

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use scalecal_core::dataset::{write_records, DataFormat};
use serde::Deserialize;
use serde_json::json;

use crate::service::{CreateSession, Service, ServiceError};
use crate::session::{Answer, SessionError};

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<Service>,
    pub admin_token: Option<String>,
}

pub fn router(service: Arc<Service>, admin_token: Option<String>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_question))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/export", get(export))
        .with_state(AppState {
            service,
            admin_token,
        })
}

fn error(status: StatusCode, body: serde_json::Value) -> Response {
    (status, Json(body)).into_response()
}

fn service_error(e: ServiceError) -> Response {
    match e {
        ServiceError::UnknownSession(_) => {
            error(StatusCode::NOT_FOUND, json!({ "error": e.to_string() }))
        }
        ServiceError::Session(SessionError::NoMoreQuestions) => {
            error(StatusCode::GONE, json!({ "error": "no_more_questions" }))
        }
        ServiceError::Session(ref s) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({ "error": s.to_string() }),
        ),
        ServiceError::Submit(ref s) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({ "accepted": false, "error": s.to_string(), "field": s.field() }),
        ),
        other => error(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({ "error": other.to_string() }),
        ),
    }
}

/// Runs blocking service work (locks, fsync) off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, Response> {
    match tokio::task::spawn_blocking(f).await {
        Ok(result) => result.map_err(service_error),
        Err(e) => Err(error(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({ "error": e.to_string() }),
        )),
    }
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Response {
    let config: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(c) => c,
            Err(e) => {
                return error(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    json!({ "error": e.to_string(), "field": "body" }),
                )
            }
        }
    };
    let service = app.service;
    match blocking(move || service.create_session(config)).await {
        Ok(id) => (StatusCode::CREATED, Json(json!({ "session_id": id }))).into_response(),
        Err(r) => r,
    }
}

async fn next_question(State(app): State<AppState>, Path(id): Path<String>) -> Response {
    let service = app.service;
    match blocking(move || service.next_question(&id)).await {
        Ok(q) => Json(q).into_response(),
        Err(r) => r,
    }
}

async fn submit_answer(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Response {
    let answer: Answer = match serde_json::from_slice(&body) {
        Ok(a) => a,
        Err(e) => {
            return error(
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "accepted": false, "error": e.to_string(), "field": "body" }),
            )
        }
    };
    let service = app.service;
    match blocking(move || service.submit_answer(&id, answer)).await {
        Ok(phase) => Json(json!({ "accepted": true, "next_phase": phase })).into_response(),
        Err(r) => r,
    }
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

fn authorized(app: &AppState, headers: &HeaderMap) -> bool {
    let Some(token) = &app.admin_token else {
        return true;
    };
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .is_some_and(|given| given == token)
}

async fn export(
    State(app): State<AppState>,
    headers: HeaderMap,
    Query(q): Query<ExportQuery>,
) -> Response {
    if !authorized(&app, &headers) {
        return error(
            StatusCode::UNAUTHORIZED,
            json!({ "error": "admin token required" }),
        );
    }
    let format = q.format.unwrap_or_else(|| "csv".into());
    let service = Arc::clone(&app.service);
    let bundle = match blocking(move || service.export()).await {
        Ok(b) => b,
        Err(r) => return r,
    };
    let (data_format, content_type) = match format.as_str() {
        "bundle" => return Json(bundle).into_response(),
        "csv" => (DataFormat::Csv, "text/csv; charset=utf-8"),
        "jsonl" => (DataFormat::Jsonl, "application/x-ndjson; charset=utf-8"),
        other => {
            return error(
                StatusCode::BAD_REQUEST,
                json!({ "error": format!("unknown format {other:?}, expected csv, jsonl or bundle"), "field": "format" }),
            )
        }
    };
    let mut out = Vec::new();
    if let Err(e) = write_records(&bundle.records, data_format, &mut out) {
        return error(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({ "error": e.to_string() }),
        );
    }
    ([(header::CONTENT_TYPE, content_type)], out).into_response()
}
