//! Chat-completion backends.

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{AgentSettings, SynthesisConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Analyst,
    Reviewer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub role: AgentRole,
    pub settings: AgentSettings,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    InvalidResponse(String),
}

impl BackendError {
    /// Transport failures, timeouts, 429 and 5xx are retried; other statuses
    /// and malformed bodies are not.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) | BackendError::Timeout(_) => true,
            BackendError::Status { status, .. } => *status == 429 || *status >= 500,
            BackendError::InvalidResponse(_) => false,
        }
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

/// Client for endpoints accepting the common chat-completions request shape.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: reqwest::Client,
    endpoint: String,
    api_key: Option<String>,
    timeout: Duration,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.into(),
            api_key,
            timeout,
        })
    }

    /// Endpoint and timeout from the config; the key is read from the
    /// configured environment variable if set.
    pub fn from_config(cfg: &SynthesisConfig) -> Result<Self, BackendError> {
        let key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Self::new(cfg.backend_endpoint.clone(), key, cfg.request_timeout())
    }

    pub fn request_body(request: &ChatRequest) -> Value {
        let mut messages = Vec::with_capacity(2);
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        messages.push(json!({"role": "user", "content": request.user}));
        let mut body = json!({"model": request.settings.model, "messages": messages});
        if let Some(t) = request.settings.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = request.settings.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }
}

pub fn extract_content(body: &Value) -> Result<String, BackendError> {
    let message = body
        .pointer("/choices/0/message/content")
        .ok_or_else(|| BackendError::InvalidResponse("missing choices[0].message.content".into()))?;
    match message {
        Value::String(s) => Ok(s.clone()),
        // Some servers return content as a list of typed parts.
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join("")),
        other => Err(BackendError::InvalidResponse(format!("content is {other}"))),
    }
}

#[async_trait]
impl ChatBackend for HttpBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let mut req = self.client.post(&self.endpoint).json(&Self::request_body(request));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout(self.timeout)
            } else {
                BackendError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            let body: String = text.chars().take(512).collect();
            return Err(BackendError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let body: Value = serde_json::from_str(&text).map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
        extract_content(&body)
    }
}
