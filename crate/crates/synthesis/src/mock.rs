//! In-process backends for tests and dry runs.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use async_trait::async_trait;

use crate::backend::{AgentRole, BackendError, ChatBackend, ChatRequest};

/// Replies from per-role queues and records every request. An exhausted
/// queue yields a transport error.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    analyst: Mutex<VecDeque<Result<String, BackendError>>>,
    reviewer: Mutex<VecDeque<Result<String, BackendError>>>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn analyst(self, reply: impl Into<String>) -> Self {
        self.analyst.lock().unwrap().push_back(Ok(reply.into()));
        self
    }

    pub fn reviewer(self, reply: impl Into<String>) -> Self {
        self.reviewer.lock().unwrap().push_back(Ok(reply.into()));
        self
    }

    pub fn failure(self, role: AgentRole, err: BackendError) -> Self {
        self.queue(role).lock().unwrap().push_back(Err(err));
        self
    }

    fn queue(&self, role: AgentRole) -> &Mutex<VecDeque<Result<String, BackendError>>> {
        match role {
            AgentRole::Analyst => &self.analyst,
            AgentRole::Reviewer => &self.reviewer,
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().unwrap().clone()
    }

    pub fn calls(&self, role: AgentRole) -> usize {
        self.requests.lock().unwrap().iter().filter(|r| r.role == role).count()
    }
}

#[async_trait]
impl ChatBackend for ScriptedBackend {
    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        self.requests.lock().unwrap().push(request.clone());
        self.queue(request.role)
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| Err(BackendError::Transport(format!("script exhausted for {:?}", request.role))))
    }
}

/// Replies computed from the request; counts calls per role.
pub struct FnBackend<F> {
    f: F,
    analyst_calls: AtomicUsize,
    reviewer_calls: AtomicUsize,
}

impl<F> FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        Self {
            f,
            analyst_calls: AtomicUsize::new(0),
            reviewer_calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self, role: AgentRole) -> usize {
        match role {
            AgentRole::Analyst => self.analyst_calls.load(Ordering::SeqCst),
            AgentRole::Reviewer => self.reviewer_calls.load(Ordering::SeqCst),
        }
    }
}

#[async_trait]
impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync,
{
    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        match request.role {
            AgentRole::Analyst => self.analyst_calls.fetch_add(1, Ordering::SeqCst),
            AgentRole::Reviewer => self.reviewer_calls.fetch_add(1, Ordering::SeqCst),
        };
        (self.f)(request)
    }
}

/// A review JSON with every criterion at `score` and one comment each.
pub fn review_json(scores: [u8; 6], comments: [&str; 6]) -> String {
    let mut obj = serde_json::Map::new();
    for ((c, s), text) in crate::rubric::Criterion::ALL.iter().zip(scores).zip(comments) {
        obj.insert(c.as_str().to_string(), serde_json::json!({"score": s, "comment": text}));
    }
    serde_json::Value::Object(obj).to_string()
}

pub const SAMPLE_TRACE: &str = "[1] Clinical scenario\n- Adults with advanced disease receive a two-drug regimen.\n[2] Candidate drugs and regimen focus\n- Cisplatin and etoposide are given together.\n[3] Combination reasoning and clinical effect\n- The pairing improves response over either agent.\n[4] Extraction-oriented clinical summary\n- One positive combination of cisplatin and etoposide.";
