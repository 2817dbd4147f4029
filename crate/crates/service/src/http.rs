//! axum router for the scoring service.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use combscore_core::metrics::MatchConfig;
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::api::{self, ApiError, EvaluateRequest, GroupScoreRequest, ScoreRequest};
use crate::config::AppConfig;

#[derive(Clone)]
pub struct AppState {
    pub config: Arc<AppConfig>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (StatusCode::BAD_REQUEST, Json(self)).into_response()
    }
}

/// Bodies are decoded here rather than through `Json<T>` so every schema
/// violation is a 400 with an `error`/`message` body.
fn decode<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        let kind = if e.is_syntax() || e.is_eof() { "MalformedJson" } else { "SchemaError" };
        ApiError::new(kind, e.to_string())
    })
}

async fn score(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: ScoreRequest = decode(&body)?;
    Ok(Json(api::score(&state.config.scoring, &req)?).into_response())
}

async fn score_group(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: GroupScoreRequest = decode(&body)?;
    Ok(Json(api::score_group(&state.config.scoring, &req)?).into_response())
}

async fn evaluate(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: EvaluateRequest = decode(&body)?;
    Ok(Json(api::evaluate(&state.config.scoring, &req)?).into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok", "version": env!("CARGO_PKG_VERSION")}))
}

async fn config_handler(State(state): State<AppState>) -> Json<serde_json::Value> {
    let s = &state.config.scoring;
    Json(json!({
        "mode": s.mode,
        "weights": s.weights,
        "epsilon_std": s.epsilon_std,
        "normalization": s.normalization,
        "metric_reward_configs": {
            "exact": MatchConfig::any_exact().label_sensitive(true),
            "partial": MatchConfig::any_partial().label_sensitive(true),
        },
        "evaluation_configs": {
            "Pos-Exact": MatchConfig::pos_exact(),
            "Pos-Partial": MatchConfig::pos_partial(),
            "Any-Exact": MatchConfig::any_exact(),
            "Any-Partial": MatchConfig::any_partial(),
        },
    }))
}

async fn not_found() -> ApiError {
    ApiError::new("NotFound", "no such endpoint")
}

pub fn router(config: AppConfig) -> Router {
    let limit = config.server.max_body_bytes;
    let state = AppState { config: Arc::new(config) };
    Router::new()
        .route("/v1/score", post(score))
        .route("/v1/score/group", post(score_group))
        .route("/v1/evaluate", post(evaluate))
        .route("/v1/health", get(health))
        .route("/v1/config", get(config_handler))
        .fallback(|| async { (StatusCode::NOT_FOUND, Json(not_found().await)) })
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

pub async fn serve(config: AppConfig) -> std::io::Result<()> {
    let bind = config.server.bind.clone();
    let listener = tokio::net::TcpListener::bind(&bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
