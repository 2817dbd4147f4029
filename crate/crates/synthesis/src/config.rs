use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::SynthesisError;

pub const DEFAULT_ANALYST_TEMPLATE: &str = include_str!("../prompts/analyst.txt");
pub const DEFAULT_REVIEWER_TEMPLATE: &str = include_str!("../prompts/reviewer.txt");
pub const DEFAULT_INSTRUCTION: &str = include_str!("../prompts/instruction.txt");

/// Per-role backend settings. No temperature is sent unless configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentSettings {
    pub model: String,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

impl AgentSettings {
    pub fn model(name: &str) -> Self {
        Self {
            model: name.to_string(),
            temperature: None,
            max_tokens: None,
        }
    }
}

impl Default for AgentSettings {
    fn default() -> Self {
        Self::model("gpt-4o")
    }
}

/// A system prompt and a user prompt template. In files the two parts are
/// separated by a line holding only `---`; without it the whole text is the
/// user template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub system: String,
    pub user: String,
}

pub const PLACEHOLDERS: [&str; 5] = ["sentence", "context", "gold_labels", "feedback", "trace"];

impl PromptTemplate {
    pub fn parse(text: &str) -> Self {
        let mut system = Vec::new();
        let mut user = Vec::new();
        let mut in_user = false;
        for line in text.lines() {
            if !in_user && line.trim() == "---" {
                in_user = true;
                continue;
            }
            if in_user { user.push(line) } else { system.push(line) }
        }
        if in_user {
            Self {
                system: system.join("\n").trim().to_string(),
                user: user.join("\n").trim().to_string(),
            }
        } else {
            Self {
                system: String::new(),
                user: text.trim().to_string(),
            }
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, SynthesisError> {
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|e| SynthesisError::InvalidConfig(format!("cannot read template {}: {e}", path.display())))
    }
}

/// Values substituted into `{name}` placeholders.
#[derive(Debug, Clone, Default)]
pub struct PromptVars<'a> {
    pub sentence: &'a str,
    pub context: &'a str,
    pub gold_labels: &'a str,
    pub feedback: &'a str,
    pub trace: &'a str,
}

impl PromptVars<'_> {
    fn get(&self, name: &str) -> Option<&str> {
        Some(match name {
            "sentence" => self.sentence,
            "context" => self.context,
            "gold_labels" => self.gold_labels,
            "feedback" => self.feedback,
            "trace" => self.trace,
            _ => return None,
        })
    }
}

/// Single-pass substitution: inserted values are never rescanned, and braces
/// that do not form a known placeholder are left alone.
pub fn render(template: &str, vars: &PromptVars) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| vars.get(&after[..close]).map(|v| (v, close)));
        match replaced {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub max_iterations: u32,
    pub accept_threshold: u8,
    /// Template file paths; the bundled templates are used when unset.
    pub analyst_prompt_file: Option<PathBuf>,
    pub reviewer_prompt_file: Option<PathBuf>,
    pub instruction_file: Option<PathBuf>,
    #[serde(skip)]
    pub analyst_prompt_template: Option<PromptTemplate>,
    #[serde(skip)]
    pub reviewer_prompt_template: Option<PromptTemplate>,
    /// Appended to the Reviewer prompt when its reply could not be parsed.
    pub reask_message: String,
    /// Feedback text used on the first round.
    pub no_feedback_text: String,
    pub backend_endpoint: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub request_timeout_secs: f64,
    pub retry_limit: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    pub max_concurrent_requests: usize,
    pub analyst: AgentSettings,
    pub reviewer: AgentSettings,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            max_iterations: 3,
            accept_threshold: 4,
            analyst_prompt_file: None,
            reviewer_prompt_file: None,
            instruction_file: None,
            analyst_prompt_template: None,
            reviewer_prompt_template: None,
            reask_message: "Your previous reply could not be read. Reply with only the JSON object containing all six criteria, each with an integer score from 0 to 5 and a comment.".into(),
            no_feedback_text: "None (first round).".into(),
            backend_endpoint: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            request_timeout_secs: 120.0,
            retry_limit: 3,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            max_concurrent_requests: 4,
            analyst: AgentSettings::model("gpt-4o"),
            reviewer: AgentSettings::model("gpt-5.1"),
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        let bad = |m: String| Err(SynthesisError::InvalidConfig(m));
        if self.max_iterations < 1 {
            return bad("max_iterations must be >= 1".into());
        }
        if self.accept_threshold > crate::rubric::MAX_SCORE {
            return bad(format!("accept_threshold must be within 0..=5, got {}", self.accept_threshold));
        }
        if self.max_concurrent_requests < 1 {
            return bad("max_concurrent_requests must be >= 1".into());
        }
        if !(self.request_timeout_secs.is_finite() && self.request_timeout_secs > 0.0) {
            return bad(format!("request_timeout_secs must be > 0, got {}", self.request_timeout_secs));
        }
        Ok(())
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout_secs)
    }

    /// Resolve templates: explicit value, then configured file, then bundled.
    pub fn analyst_template(&self) -> Result<PromptTemplate, SynthesisError> {
        resolve(&self.analyst_prompt_template, &self.analyst_prompt_file, DEFAULT_ANALYST_TEMPLATE)
    }

    pub fn reviewer_template(&self) -> Result<PromptTemplate, SynthesisError> {
        resolve(&self.reviewer_prompt_template, &self.reviewer_prompt_file, DEFAULT_REVIEWER_TEMPLATE)
    }

    pub fn instruction(&self) -> Result<String, SynthesisError> {
        match &self.instruction_file {
            Some(path) => std::fs::read_to_string(path)
                .map(|t| t.trim().to_string())
                .map_err(|e| SynthesisError::InvalidConfig(format!("cannot read instruction {}: {e}", path.display()))),
            None => Ok(DEFAULT_INSTRUCTION.trim().to_string()),
        }
    }
}

fn resolve(explicit: &Option<PromptTemplate>, file: &Option<PathBuf>, bundled: &str) -> Result<PromptTemplate, SynthesisError> {
    match (explicit, file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(path)) => PromptTemplate::from_file(path),
        (None, None) => Ok(PromptTemplate::parse(bundled)),
    }
}
