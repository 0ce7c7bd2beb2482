//! HTTP routes. Errors are returned as `{"code": ..., "message": ...}`.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use saturation::planner::parse_pattern;
use saturation::ProjectionMethod;

use crate::log::{Elicited, Entry};
use crate::store::SessionStore;
use crate::StoreError;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "invalid",
            message: message.into(),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        let (status, code) = match &err {
            StoreError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            StoreError::DuplicateInterview(_) | StoreError::EmptyLog => {
                (StatusCode::CONFLICT, "conflict")
            }
            StoreError::Invalid(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
            StoreError::Io(_) | StoreError::CorruptLog { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
        };
        Self {
            status,
            code,
            message: err.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        let status = match rejection.status() {
            StatusCode::UNSUPPORTED_MEDIA_TYPE => StatusCode::UNSUPPORTED_MEDIA_TYPE,
            StatusCode::BAD_REQUEST => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            status,
            code: "invalid",
            message: rejection.body_text(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_owned(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Store = Arc<SessionStore>;

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub name: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
pub struct AppendRequest {
    pub interview_id: String,
    pub codes: Option<Vec<String>>,
    pub new_code_count: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum PatternInput {
    List(Vec<i64>),
    Text(String),
}

#[derive(Debug, Deserialize)]
pub struct WhatIfRequest {
    #[serde(default)]
    pub pattern: Option<PatternInput>,
    #[serde(default)]
    pub methods: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub format: Option<String>,
}

pub fn router(store: Store) -> Router {
    Router::new()
        .route("/api/sessions", post(create).get(list))
        .route("/api/sessions/{id}", get(fetch))
        .route("/api/sessions/{id}/interviews", post(append))
        .route("/api/sessions/{id}/undo", post(undo))
        .route("/api/sessions/{id}/whatif", post(what_if))
        .route("/api/sessions/{id}/export", get(export))
        .layer(CorsLayer::permissive())
        .with_state(store)
}

async fn create(
    State(store): State<Store>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let state = store.create(&req.name, req.alpha).await?;
    Ok((StatusCode::CREATED, Json(state)))
}

async fn list(State(store): State<Store>) -> Json<Vec<String>> {
    Json(store.session_ids())
}

async fn fetch(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(store.get(&id).await?))
}

async fn append(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: Result<Json<AppendRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let elicited = match (req.codes, req.new_code_count) {
        (Some(_), Some(_)) => {
            return Err(ApiError::invalid(
                "give either codes or new_code_count, not both",
            ))
        }
        (Some(codes), None) => Elicited::Codes { codes },
        (None, Some(new_code_count)) => Elicited::Count { new_code_count },
        (None, None) => Elicited::Codes { codes: Vec::new() },
    };
    let entry = Entry {
        interview_id: req.interview_id,
        elicited,
    };
    Ok(Json(store.append(&id, entry).await?))
}

async fn undo(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(store.undo(&id).await?))
}

async fn what_if(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: Result<Json<WhatIfRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let pattern = match req.pattern {
        None => Vec::new(),
        Some(PatternInput::Text(text)) => {
            parse_pattern(&text, 1).map_err(|e| ApiError::invalid(e.to_string()))?
        }
        Some(PatternInput::List(values)) => values
            .into_iter()
            .enumerate()
            .map(|(i, v)| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(ApiError::invalid(format!(
                    "non-binary token \"{other}\" at position {}",
                    i + 1
                ))),
            })
            .collect::<ApiResult<Vec<bool>>>()?,
    };
    let methods = match req.methods {
        None => ProjectionMethod::defaults().to_vec(),
        Some(names) => names
            .iter()
            .map(|n| {
                n.parse::<ProjectionMethod>()
                    .map_err(|e| ApiError::invalid(e.to_string()))
            })
            .collect::<ApiResult<Vec<_>>>()?,
    };
    Ok(Json(store.what_if(&id, &pattern, &methods).await?))
}

async fn export(
    State(store): State<Store>,
    Path(id): Path<String>,
    Query(query): Query<ExportQuery>,
) -> ApiResult<Response> {
    match query.format.as_deref().unwrap_or("json") {
        "json" => Ok(Json(store.get(&id).await?).into_response()),
        "csv" => {
            let body = store.export_csv(&id).await?;
            Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], body).into_response())
        }
        other => Err(ApiError::invalid(format!(
            "unknown export format \"{other}\""
        ))),
    }
}
