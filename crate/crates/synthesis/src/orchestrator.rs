//! The generation → review → feedback loop.

use std::sync::Arc;
use std::time::Duration;

use combscore_core::parser::to_answer_json;
use combscore_core::Instance;
use futures::stream::{self, StreamExt};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{AgentRole, BackendError, ChatBackend, ChatRequest};
use crate::config::{render, PromptTemplate, PromptVars, SynthesisConfig};
use crate::error::SynthesisError;
use crate::rubric::{accept, parse_review, Criterion, RubricScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeStatus {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptRole {
    AnalystPrompt,
    Analyst,
    ReviewerPrompt,
    Reviewer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub iteration: u32,
    pub role: TranscriptRole,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisOutcome {
    pub instance_id: String,
    pub status: OutcomeStatus,
    pub iterations_used: u32,
    /// The accepted trace, or the last one produced when rejected.
    pub trace_text: Option<String>,
    pub final_scores: Option<RubricScores>,
    pub transcript: Vec<TranscriptEntry>,
}

/// Delay before retry `attempt` (0-based): `base · 2^attempt`, capped, times a
/// uniform jitter in [0.5, 1.5).
pub fn backoff_delay(cfg: &SynthesisConfig, attempt: u32) -> Duration {
    let exp = cfg.backoff_base_ms.saturating_mul(1u64 << attempt.min(20));
    let capped = exp.min(cfg.backoff_max_ms) as f64;
    let jitter: f64 = rand::rng().random_range(0.5..1.5);
    Duration::from_secs_f64(capped * jitter / 1000.0)
}

async fn call_with_retry(backend: &dyn ChatBackend, request: &ChatRequest, cfg: &SynthesisConfig) -> Result<String, SynthesisError> {
    let timeout = cfg.request_timeout();
    let mut attempt = 0;
    loop {
        let result = match tokio::time::timeout(timeout, backend.complete(request)).await {
            Ok(r) => r,
            Err(_) => Err(BackendError::Timeout(timeout)),
        };
        match result {
            Ok(text) => return Ok(text),
            Err(e) if e.is_retryable() && attempt < cfg.retry_limit => {
                let delay = backoff_delay(cfg, attempt);
                tracing::warn!(role = ?request.role, attempt, error = %e, ?delay, "backend call failed, retrying");
                tokio::time::sleep(delay).await;
                attempt += 1;
            }
            Err(last) => {
                return Err(SynthesisError::Backend {
                    attempts: attempt + 1,
                    last,
                })
            }
        }
    }
}

/// The Analyst may wrap its trace in think tags; keep only the inside.
fn extract_trace(output: &str) -> String {
    let lower = output.to_ascii_lowercase();
    if let (Some(open), Some(close)) = (lower.find("<think>"), lower.find("</think>")) {
        if open < close {
            return output[open + "<think>".len()..close].trim().to_string();
        }
    }
    output.trim().to_string()
}

/// Reviewer feedback threaded into the next Analyst prompt: every criterion's
/// score plus every comment string verbatim.
pub fn render_feedback(scores: &RubricScores, threshold: u8) -> String {
    let mut lines = Vec::new();
    for c in Criterion::ALL {
        let score = scores.get(c);
        let flag = if score < threshold { " (below threshold)" } else { "" };
        match scores.comments.get(c.as_str()) {
            Some(comment) => lines.push(format!("- {c}: {score}/5{flag}. {comment}")),
            None => lines.push(format!("- {c}: {score}/5{flag}.")),
        }
    }
    for (key, comment) in &scores.comments {
        if !Criterion::ALL.iter().any(|c| c.as_str() == key) {
            lines.push(format!("- {key}: {comment}"));
        }
    }
    lines.join("\n")
}

fn context_text(instance: &Instance) -> &str {
    instance.context.as_deref().filter(|c| !c.trim().is_empty()).unwrap_or("(none)")
}

struct Templates {
    analyst: PromptTemplate,
    reviewer: PromptTemplate,
}

impl Templates {
    fn load(cfg: &SynthesisConfig) -> Result<Self, SynthesisError> {
        Ok(Self {
            analyst: cfg.analyst_template()?,
            reviewer: cfg.reviewer_template()?,
        })
    }
}

pub async fn run_synthesis(instance: &Instance, cfg: &SynthesisConfig, backend: &dyn ChatBackend) -> Result<SynthesisOutcome, SynthesisError> {
    cfg.validate()?;
    let templates = Templates::load(cfg)?;
    run_with_templates(instance, cfg, &templates, backend).await
}

async fn run_with_templates(
    instance: &Instance,
    cfg: &SynthesisConfig,
    templates: &Templates,
    backend: &dyn ChatBackend,
) -> Result<SynthesisOutcome, SynthesisError> {
    let gold_labels = to_answer_json(&instance.gold);
    let context = context_text(instance);
    let mut transcript = Vec::new();
    let mut feedback = cfg.no_feedback_text.clone();
    let mut last: Option<(String, RubricScores)> = None;

    for iteration in 1..=cfg.max_iterations {
        let vars = PromptVars {
            sentence: &instance.sentence,
            context,
            gold_labels: &gold_labels,
            feedback: &feedback,
            trace: "",
        };
        let analyst_req = ChatRequest {
            role: AgentRole::Analyst,
            settings: cfg.analyst.clone(),
            system: render(&templates.analyst.system, &vars),
            user: render(&templates.analyst.user, &vars),
        };
        transcript.push(TranscriptEntry {
            iteration,
            role: TranscriptRole::AnalystPrompt,
            message: analyst_req.user.clone(),
        });
        let analyst_out = call_with_retry(backend, &analyst_req, cfg).await?;
        transcript.push(TranscriptEntry {
            iteration,
            role: TranscriptRole::Analyst,
            message: analyst_out.clone(),
        });
        let trace = extract_trace(&analyst_out);

        let vars = PromptVars { trace: &trace, ..vars };
        let mut reviewer_req = ChatRequest {
            role: AgentRole::Reviewer,
            settings: cfg.reviewer.clone(),
            system: render(&templates.reviewer.system, &vars),
            user: render(&templates.reviewer.user, &vars),
        };
        let scores = {
            let mut reasked = false;
            loop {
                transcript.push(TranscriptEntry {
                    iteration,
                    role: TranscriptRole::ReviewerPrompt,
                    message: reviewer_req.user.clone(),
                });
                let review_out = call_with_retry(backend, &reviewer_req, cfg).await?;
                transcript.push(TranscriptEntry {
                    iteration,
                    role: TranscriptRole::Reviewer,
                    message: review_out.clone(),
                });
                match parse_review(&review_out) {
                    Ok(s) => break s,
                    Err(e) if reasked => {
                        return Err(SynthesisError::ReviewParse {
                            iteration,
                            message: e.0,
                            output: review_out,
                        })
                    }
                    Err(e) => {
                        tracing::debug!(iteration, error = %e, "re-asking reviewer");
                        reasked = true;
                        reviewer_req.user = format!("{}\n\n{}", reviewer_req.user, cfg.reask_message);
                    }
                }
            }
        };

        if accept(&scores, cfg.accept_threshold) {
            return Ok(SynthesisOutcome {
                instance_id: instance.id.clone(),
                status: OutcomeStatus::Accepted,
                iterations_used: iteration,
                trace_text: Some(trace),
                final_scores: Some(scores),
                transcript,
            });
        }
        feedback = render_feedback(&scores, cfg.accept_threshold);
        last = Some((trace, scores));
    }

    let (trace, scores) = last.map_or((None, None), |(t, s)| (Some(t), Some(s)));
    Ok(SynthesisOutcome {
        instance_id: instance.id.clone(),
        status: OutcomeStatus::Rejected,
        iterations_used: cfg.max_iterations,
        trace_text: trace,
        final_scores: scores,
        transcript,
    })
}

/// Run every instance with at most `max_concurrent_requests` runs in flight.
/// Results come back in input order.
pub async fn run_corpus(
    instances: &[Instance],
    cfg: &SynthesisConfig,
    backend: Arc<dyn ChatBackend>,
) -> Result<Vec<Result<SynthesisOutcome, SynthesisError>>, SynthesisError> {
    cfg.validate()?;
    let templates = Templates::load(cfg)?;
    let templates = &templates;
    let backend = &backend;
    Ok(stream::iter(instances)
        .map(|instance| async move { run_with_templates(instance, cfg, templates, backend.as_ref()).await })
        .buffered(cfg.max_concurrent_requests)
        .collect()
        .await)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_extraction() {
        assert_eq!(extract_trace("  [1] a\n- b  "), "[1] a\n- b");
        assert_eq!(extract_trace("Sure!\n<THINK>[1] x</think> tail"), "[1] x");
        assert_eq!(extract_trace("</think> <think>"), "</think> <think>");
    }

    #[test]
    fn feedback_carries_comments() {
        let mut s = RubricScores::uniform(5);
        s.set(Criterion::FactualConsistency, 3);
        s.comments.insert("factual_consistency".into(), "Label should be POS.".into());
        s.comments.insert("overall".into(), "Tighten section [3].".into());
        let f = render_feedback(&s, 4);
        assert!(f.contains("factual_consistency: 3/5 (below threshold). Label should be POS."));
        assert!(f.contains("Tighten section [3]."));
    }

    #[test]
    fn backoff_grows_and_caps() {
        let cfg = SynthesisConfig {
            backoff_base_ms: 100,
            backoff_max_ms: 1000,
            ..Default::default()
        };
        for _ in 0..50 {
            let d0 = backoff_delay(&cfg, 0).as_secs_f64();
            assert!((0.05..0.15).contains(&d0));
            let d10 = backoff_delay(&cfg, 10).as_secs_f64();
            assert!((0.5..1.5).contains(&d10));
        }
    }
}
