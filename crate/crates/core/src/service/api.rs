use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::multipart::MultipartRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::corpus::{clean_and_tokenize, Level};
use crate::generation::{generate, GenerationRequest, Strategy, DEFAULT_NUM_WORDS};
use crate::service::sessions::Turn;
use crate::service::speech::AudioFormat;
use crate::service::AppState;
use crate::Error;

pub const MAX_AUDIO_BYTES: usize = 25 * 1024 * 1024;

/// JSON error body `{error_code, message}` with its status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::EmptySeed | Error::InvalidLevel(_) | Error::InvalidConfig(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error_code: self.code,
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
struct GenerateBody {
    seed_text: String,
    level: String,
    num_words: Option<usize>,
    strategy: Option<String>,
    temperature: Option<f64>,
    rng_seed: Option<u64>,
    session_id: Option<String>,
    callback_url: Option<String>,
}

/// Body of a synchronous generate response, and the webhook payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebhookPayload {
    pub session_id: Uuid,
    pub seed_text: String,
    pub generated_words: Vec<String>,
    pub full_text: String,
    pub level: Level,
    pub model_id: String,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accepted {
    pub session_id: Uuid,
    pub status: String,
}

#[derive(Debug, Deserialize)]
struct CreateSessionBody {
    level: String,
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "InvalidJson", e.to_string()))
}

fn parse_level(s: &str) -> ApiResult<Level> {
    s.parse::<Level>().map_err(ApiError::from)
}

fn session_not_found(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "SessionNotFound", format!("no session {id:?}"))
}

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/api/generate", post(handle_generate))
        .route("/api/levels", get(handle_levels))
        .route("/api/sessions", post(handle_session_create))
        .route("/api/sessions/{id}", get(handle_session_get))
        .route(
            "/api/transcribe",
            post(handle_transcribe).layer(DefaultBodyLimit::max(MAX_AUDIO_BYTES)),
        )
        .route("/api/health", get(handle_health))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed on this route")
        })
}

async fn handle_generate(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let body: GenerateBody = parse_json(&body)?;
    let level = parse_level(&body.level)?;
    let strategy = match &body.strategy {
        Some(s) => s.parse::<Strategy>()?,
        None => Strategy::Greedy,
    };
    let request = GenerationRequest {
        seed_text: body.seed_text.clone(),
        level,
        num_words: body.num_words.unwrap_or(DEFAULT_NUM_WORDS),
        strategy,
        temperature: body.temperature.unwrap_or(1.0),
        rng_seed: body.rng_seed,
    };
    request.validate()?;
    if clean_and_tokenize(&request.seed_text).is_empty() {
        return Err(Error::EmptySeed.into());
    }

    let existing = match &body.session_id {
        Some(raw) => {
            let id = Uuid::parse_str(raw).map_err(|_| session_not_found(raw))?;
            let rec = state.sessions.get(&id).await.ok_or_else(|| session_not_found(raw))?;
            if rec.level != level {
                return Err(Error::InvalidLevel(format!("session {id} is for level {}, request asked for {level}", rec.level)).into());
            }
            Some(id)
        }
        None => None,
    };
    let loaded = state.registry.get(level).cloned().ok_or_else(|| {
        ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "ModelUnavailable",
            format!("no model loaded for level {level}"),
        )
    })?;
    let callback = match &body.callback_url {
        Some(url) => Some(check_callback(url)?),
        None => None,
    };
    let session_id = match existing {
        Some(id) => id,
        None => state.sessions.create(level)?.session_id,
    };

    let run = {
        let state = state.clone();
        move || async move {
            let started = Instant::now();
            let model = loaded.model.clone();
            let model_id = loaded.model_id.clone();
            let req = request.clone();
            let result = tokio::task::spawn_blocking(move || generate(&model, &model_id, &req))
                .await
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
            let latency_ms = started.elapsed().as_millis() as u64;
            state
                .sessions
                .append(
                    &session_id,
                    Turn {
                        seed_text: request.seed_text.clone(),
                        generated_words: result.generated_words.clone(),
                        full_text: result.full_text.clone(),
                        timestamp: Utc::now(),
                        latency_ms,
                    },
                )
                .await?;
            Ok::<_, ApiError>(WebhookPayload {
                session_id,
                seed_text: request.seed_text,
                generated_words: result.generated_words,
                full_text: result.full_text,
                level: result.level,
                model_id: result.model_id,
                latency_ms,
            })
        }
    };

    match callback {
        None => Ok(Json(run().await?).into_response()),
        Some(url) => {
            let webhooks = state.webhooks.clone();
            state.spawn_background(async move {
                match run().await {
                    Ok(payload) => {
                        let outcome = webhooks.deliver(&url, &payload).await;
                        tracing::info!(%url, ?outcome, "webhook finished");
                    }
                    Err(e) => tracing::error!(%url, error = %e.message, "generation for webhook failed"),
                }
            });
            let body = Accepted {
                session_id,
                status: "accepted".into(),
            };
            Ok((StatusCode::ACCEPTED, Json(body)).into_response())
        }
    }
}

fn check_callback(url: &str) -> ApiResult<String> {
    match reqwest::Url::parse(url) {
        Ok(u) if matches!(u.scheme(), "http" | "https") && u.has_host() => Ok(url.to_owned()),
        _ => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "InvalidCallback",
            format!("callback_url {url:?} is not an http(s) URL"),
        )),
    }
}

async fn handle_levels(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.registry.levels())
}

async fn handle_health(State(state): State<AppState>) -> impl IntoResponse {
    Json(serde_json::json!({"status": "ok", "models_loaded": state.registry.len()}))
}

async fn handle_session_create(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let body: CreateSessionBody = parse_json(&body)?;
    let rec = state.sessions.create(parse_level(&body.level)?)?;
    Ok((StatusCode::CREATED, Json(rec)).into_response())
}

async fn handle_session_get(State(state): State<AppState>, Path(raw): Path<String>) -> ApiResult<Response> {
    let id = Uuid::parse_str(&raw).map_err(|_| session_not_found(&raw))?;
    let rec = state.sessions.get(&id).await.ok_or_else(|| session_not_found(&raw))?;
    Ok(Json(rec).into_response())
}

async fn handle_transcribe(
    State(state): State<AppState>,
    multipart: Result<Multipart, MultipartRejection>,
) -> ApiResult<Response> {
    let mut multipart = multipart.map_err(|e| {
        ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "UnsupportedFormat",
            format!("expected multipart/form-data with an audio part: {e}"),
        )
    })?;
    let bad_part = |e: axum::extract::multipart::MultipartError| ApiError::new(StatusCode::BAD_REQUEST, "InvalidMultipart", e.body_text());
    let mut audio = None;
    while let Some(field) = multipart.next_field().await.map_err(bad_part)? {
        let is_audio = field.name() == Some("audio") || field.file_name().is_some();
        if !is_audio {
            continue;
        }
        let format = AudioFormat::detect(field.content_type(), field.file_name());
        let described = format!("{:?} ({:?})", field.content_type().unwrap_or("no content type"), field.file_name());
        let bytes = field.bytes().await.map_err(bad_part)?;
        audio = Some((format, described, bytes));
        break;
    }
    let Some((format, described, bytes)) = audio else {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "MissingAudio", "no audio part in the upload"));
    };
    let format = format.ok_or_else(|| {
        ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "UnsupportedFormat",
            format!("unsupported audio format {described}; send audio/wav"),
        )
    })?;
    let provider = Arc::clone(&state.speech);
    let text = tokio::task::spawn_blocking(move || provider.transcribe(&bytes, format))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, "ProviderError", e.to_string()))?;
    Ok(Json(serde_json::json!({ "text": text })).into_response())
}
