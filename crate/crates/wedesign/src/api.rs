//! HTTP/JSON API over the session store.
//!
//! | method | path                             | body                | reply           |
//! |--------|----------------------------------|---------------------|-----------------|
//! | POST   | `/trials`                        | `TrialConfig`       | 201 `TrialView` |
//! | GET    | `/trials/{id}`                   |                     | `TrialView`     |
//! | GET    | `/trials/{id}/recommendation`    |                     | `Recommendation`|
//! | POST   | `/trials/{id}/outcomes`          | `OutcomePost`       | `Recommendation`|
//! | POST   | `/trials/{id}/whatif`            | `WhatIf`            | `Recommendation`|
//!
//! Errors are `{"code", "message", "details"}` with 400 for unreadable
//! bodies, 404 for unknown trials, 409 for a stale `expected_revision` and
//! 422 for requests the design rejects.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;
use wedesign_core::TrialConfig;

use crate::session::{OutcomeBatch, Recommendation, SessionError, TrialSession};
use crate::store::{FileStore, StoreError};

#[derive(Debug, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>, details: Value) -> Self {
        Self { status: status.as_u16(), code: code.into(), message: message.into(), details }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::Config(c) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_config", message, json!({ "problems": c.0 }))
            }
            SessionError::Engine(inner) => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "engine_rejected",
                message,
                json!({ "error": format!("{inner:?}") }),
            ),
            SessionError::RevisionConflict { expected, actual } => ApiError::new(
                StatusCode::CONFLICT,
                "revision_conflict",
                message,
                json!({ "expected": expected, "actual": actual }),
            ),
            SessionError::Malformed(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed", message, Value::Null),
            SessionError::Closed(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "trial_closed", message, Value::Null),
            SessionError::Corrupt(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "corrupt_session", message, Value::Null)
            }
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let message = e.to_string();
        match e {
            StoreError::NotFound(id) => ApiError::new(StatusCode::NOT_FOUND, "not_found", message, json!({ "id": id })),
            StoreError::InvalidId(id) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_id", message, json!({ "id": id })),
            StoreError::RevisionConflict { expected, actual } => ApiError::new(
                StatusCode::CONFLICT,
                "revision_conflict",
                message,
                json!({ "expected": expected, "actual": actual }),
            ),
            StoreError::Session(s) => s.into(),
            StoreError::Format(_) | StoreError::Io(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", message, Value::Null)
            }
        }
    }
}

/// Body of `POST /trials/{id}/outcomes`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomePost {
    #[serde(flatten)]
    pub batch: OutcomeBatch,
    pub expected_revision: u64,
}

/// Body of `POST /trials/{id}/whatif`. An empty list asks for the current
/// recommendation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WhatIf {
    #[serde(default)]
    pub batches: Vec<OutcomeBatch>,
}

/// A session together with its current recommendation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialView {
    #[serde(flatten)]
    pub session: TrialSession,
    pub recommendation: Recommendation,
}

struct AppState {
    store: FileStore,
    writes: Mutex<()>,
}

type Shared = Arc<AppState>;

pub fn router(store: FileStore) -> Router {
    let state = Arc::new(AppState { store, writes: Mutex::new(()) });
    Router::new()
        .route("/trials", post(create_trial))
        .route("/trials/{id}", get(get_trial))
        .route("/trials/{id}/recommendation", get(get_recommendation))
        .route("/trials/{id}/outcomes", post(post_outcomes))
        .route("/trials/{id}/whatif", post(whatif))
        .with_state(state)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_request",
            format!("request body is not valid: {e}"),
            json!({ "line": e.line(), "column": e.column() }),
        )
    })
}

/// Loads a session and, under the randomised rule, fixes the draw for its
/// next cohort so every later read sees the same one. Only a read that has
/// to persist a new draw waits for the write lock.
async fn load_fixed(app: &AppState, id: &str) -> Result<TrialSession, ApiError> {
    let session = app.store.load(id)?;
    if !session.clone().fix_draw() {
        return Ok(session);
    }
    let _guard = app.writes.lock().await;
    let mut session = app.store.load(id)?;
    if session.fix_draw() {
        app.store.save(&session, session.revision)?;
    }
    Ok(session)
}

async fn create_trial(State(app): State<Shared>, body: Bytes) -> Result<(StatusCode, Json<TrialView>), ApiError> {
    let config: TrialConfig = parse(&body)?;
    let mut session = TrialSession::create(config)?;
    session.fix_draw();
    let _guard = app.writes.lock().await;
    app.store.create(&session)?;
    let recommendation = session.recommendation()?;
    Ok((StatusCode::CREATED, Json(TrialView { session, recommendation })))
}

async fn get_trial(State(app): State<Shared>, Path(id): Path<String>) -> Result<Json<TrialView>, ApiError> {
    let session = load_fixed(&app, &id).await?;
    let recommendation = session.recommendation()?;
    Ok(Json(TrialView { session, recommendation }))
}

async fn get_recommendation(
    State(app): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<Recommendation>, ApiError> {
    let session = load_fixed(&app, &id).await?;
    Ok(Json(session.recommendation()?))
}

async fn post_outcomes(
    State(app): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Recommendation>, ApiError> {
    let post: OutcomePost = parse(&body)?;
    let _guard = app.writes.lock().await;
    let mut session = app.store.load(&id)?;
    let before = session.revision;
    session.post_outcomes(&post.batch, post.expected_revision)?;
    session.fix_draw();
    app.store.save(&session, before)?;
    Ok(Json(session.recommendation()?))
}

async fn whatif(
    State(app): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Recommendation>, ApiError> {
    let request: WhatIf = parse(&body)?;
    let session = load_fixed(&app, &id).await?;
    Ok(Json(session.whatif(&request.batches)?))
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: &str, store: FileStore) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store)).await
}
