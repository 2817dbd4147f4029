//! Request/response types and the pure scoring functions behind the HTTP
//! handlers. The CLI calls the same functions.

use std::collections::BTreeSet;

use combscore_core::evaluation::{evaluate_corpus, parse_prediction_jsonl, EvaluationReport, PredictionRecord};
use combscore_core::model::{validate_gold, CombinationRecord, CombinationSet};
use combscore_core::parser::{parse_response, ParseMode, ParsedResponse, ThinkStructureReport};
use combscore_core::rewards::{combined_reward_with_entities, group_advantages, RewardBreakdown, RewardWeights};
use combscore_core::model::normalize_drug_name;
use combscore_core::{Combination, EffectLabel, Error, Instance, NormalizationPolicy, TaskMode};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ScoringConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub response_text: String,
    pub gold: Vec<CombinationRecord>,
    #[serde(default)]
    pub mode: Option<TaskMode>,
    #[serde(default)]
    pub extended: bool,
    /// Partial override of the configured weights.
    #[serde(default)]
    pub weights: Option<Value>,
    /// Gold entity names for the optional NER term.
    #[serde(default)]
    pub entities: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupScoreRequest {
    pub responses: Vec<String>,
    pub gold: Vec<CombinationRecord>,
    #[serde(default)]
    pub mode: Option<TaskMode>,
    #[serde(default)]
    pub extended: bool,
    #[serde(default)]
    pub weights: Option<Value>,
    #[serde(default)]
    pub epsilon_std: Option<f64>,
    #[serde(default)]
    pub entities: Option<Vec<String>>,
}

/// What the parser saw, without the raw think text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedSummary {
    pub has_think: bool,
    pub has_answer: bool,
    pub answer_json_valid: bool,
    pub think_report: Option<ThinkStructureReport>,
    pub predictions: Vec<CombinationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ner_entities: Option<BTreeSet<String>>,
    pub parse_notes: Vec<String>,
}

impl From<&ParsedResponse> for ParsedSummary {
    fn from(p: &ParsedResponse) -> Self {
        Self {
            has_think: p.has_think,
            has_answer: p.has_answer,
            answer_json_valid: p.answer_json_valid,
            think_report: p.think_report.clone(),
            predictions: p.predictions().iter().map(CombinationRecord::from).collect(),
            ner_entities: p.ner_entities.clone(),
            parse_notes: p.parse_notes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub reward: RewardBreakdown,
    pub parsed: ParsedSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupItem {
    pub reward: RewardBreakdown,
    pub parsed: ParsedSummary,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScoreResponse {
    pub results: Vec<GroupItem>,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub epsilon_std: f64,
}

/// Records as objects or one JSON-lines string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Records<T> {
    Inline(Vec<T>),
    JsonLines(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub predictions: Records<PredictionRecord>,
    pub gold: Records<Instance>,
    #[serde(default)]
    pub mode: Option<TaskMode>,
    #[serde(default)]
    pub normalization: Option<NormalizationPolicy>,
}

/// A request-level failure with a stable machine-readable kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self {
            error: kind.to_string(),
            message: message.into(),
            details: None,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let details = match &e {
            Error::IdMismatch {
                missing_in_predictions,
                missing_in_gold,
            } => Some(serde_json::json!({
                "missing_in_predictions": missing_in_predictions,
                "missing_in_gold": missing_in_gold,
            })),
            Error::Parse { line, field, .. } => Some(serde_json::json!({"line": line, "field": field})),
            _ => None,
        };
        Self {
            error: e.kind().to_string(),
            message: e.to_string(),
            details,
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

fn effective_weights(base: &RewardWeights, overrides: Option<&Value>) -> ApiResult<RewardWeights> {
    let Some(overrides) = overrides else { return Ok(*base) };
    let Value::Object(patch) = overrides else {
        return Err(ApiError::new("SchemaError", "weights must be an object"));
    };
    let mut merged = serde_json::to_value(base).expect("weights serialize");
    for (k, v) in patch {
        match (merged.get_mut(k), v) {
            (Some(Value::Object(dst)), Value::Object(src)) => {
                for (ik, iv) in src {
                    dst.insert(ik.clone(), iv.clone());
                }
            }
            (Some(slot), _) => *slot = v.clone(),
            (None, _) => return Err(ApiError::new("SchemaError", format!("unknown weight {k:?}"))),
        }
    }
    let weights: RewardWeights = serde_json::from_value(merged).map_err(|e| ApiError::new("SchemaError", format!("weights: {e}")))?;
    weights.validate()?;
    Ok(weights)
}

/// Normalize and validate gold records for `mode`.
pub fn gold_set(records: &[CombinationRecord], mode: TaskMode, policy: &NormalizationPolicy) -> ApiResult<CombinationSet> {
    let mut set = CombinationSet::new();
    for r in records {
        let label: EffectLabel = r.label.parse()?;
        set.insert(Combination::from_raw(&r.drugs, label, policy)?);
    }
    validate_gold(&set, mode)?;
    Ok(set)
}

fn gold_entities(names: Option<&Vec<String>>, policy: &NormalizationPolicy) -> ApiResult<Option<BTreeSet<String>>> {
    names
        .map(|n| n.iter().map(|x| normalize_drug_name(x, policy)).collect::<Result<BTreeSet<_>, _>>())
        .transpose()
        .map_err(ApiError::from)
}

struct Prepared {
    golds: CombinationSet,
    entities: Option<BTreeSet<String>>,
    weights: RewardWeights,
    mode: TaskMode,
    parse_mode: ParseMode,
}

fn prepare(
    cfg: &ScoringConfig,
    gold: &[CombinationRecord],
    mode: Option<TaskMode>,
    extended: bool,
    weights: Option<&Value>,
    entities: Option<&Vec<String>>,
) -> ApiResult<Prepared> {
    let mode = mode.unwrap_or(cfg.mode);
    Ok(Prepared {
        golds: gold_set(gold, mode, &cfg.normalization)?,
        entities: gold_entities(entities, &cfg.normalization)?,
        weights: effective_weights(&cfg.weights, weights)?,
        mode,
        parse_mode: if extended { ParseMode::Extended } else { ParseMode::Standard },
    })
}

fn score_one(p: &Prepared, text: &str, policy: &NormalizationPolicy) -> ScoreResponse {
    let parsed = parse_response(text, policy, p.parse_mode);
    let reward = combined_reward_with_entities(&parsed, &p.golds, p.entities.as_ref(), &p.weights, p.mode);
    ScoreResponse {
        reward,
        parsed: ParsedSummary::from(&parsed),
    }
}

pub fn score(cfg: &ScoringConfig, req: &ScoreRequest) -> ApiResult<ScoreResponse> {
    let p = prepare(cfg, &req.gold, req.mode, req.extended, req.weights.as_ref(), req.entities.as_ref())?;
    Ok(score_one(&p, &req.response_text, &cfg.normalization))
}

pub fn score_group(cfg: &ScoringConfig, req: &GroupScoreRequest) -> ApiResult<GroupScoreResponse> {
    if req.responses.is_empty() {
        return Err(Error::EmptyGroup.into());
    }
    let p = prepare(cfg, &req.gold, req.mode, req.extended, req.weights.as_ref(), req.entities.as_ref())?;
    let eps = req.epsilon_std.unwrap_or(cfg.epsilon_std);
    let scored: Vec<ScoreResponse> = req.responses.iter().map(|t| score_one(&p, t, &cfg.normalization)).collect();
    let rewards: Vec<f64> = scored.iter().map(|s| s.reward.r_total).collect();
    let advantages = group_advantages(&rewards, eps)?;
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(GroupScoreResponse {
        results: scored
            .into_iter()
            .zip(advantages)
            .map(|(s, advantage)| GroupItem {
                reward: s.reward,
                parsed: s.parsed,
                advantage,
            })
            .collect(),
        mean_reward: mean,
        std_reward: std,
        epsilon_std: eps,
    })
}

fn gold_records(records: &Records<Instance>) -> ApiResult<Vec<Instance>> {
    match records {
        Records::Inline(v) => {
            for i in v {
                i.validate()?;
            }
            Ok(v.clone())
        }
        Records::JsonLines(text) => {
            let mut out = Vec::new();
            for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let inst: Instance = serde_json::from_str(line).map_err(|e| {
                    ApiError::from(Error::Parse {
                        path: "<gold>".into(),
                        line: n + 1,
                        field: "<record>".into(),
                        message: e.to_string(),
                    })
                })?;
                inst.validate()?;
                out.push(inst);
            }
            Ok(out)
        }
    }
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> ApiResult<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ApiError::new("DuplicateId", format!("duplicate id {id:?} in {what}")));
        }
    }
    Ok(())
}

pub fn evaluate(cfg: &ScoringConfig, req: &EvaluateRequest) -> ApiResult<EvaluationReport> {
    let predictions = match &req.predictions {
        Records::Inline(v) => v.clone(),
        Records::JsonLines(text) => parse_prediction_jsonl(text)?,
    };
    let gold = gold_records(&req.gold)?;
    check_unique(predictions.iter().map(|p| p.id.as_str()), "predictions")?;
    check_unique(gold.iter().map(|g| g.id.as_str()), "gold")?;
    let mode = req.mode.or_else(|| gold.first().map(|g| g.mode)).unwrap_or(cfg.mode);
    let policy = req.normalization.unwrap_or(cfg.normalization);
    Ok(evaluate_corpus(&predictions, &gold, mode, &policy)?)
}
