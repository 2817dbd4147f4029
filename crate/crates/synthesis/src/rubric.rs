//! Reviewer rubric: six 0–5 criteria, tolerant JSON extraction, acceptance.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const MAX_SCORE: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    FormatCompliance,
    MedicalValidity,
    SemanticConsistency,
    FactualConsistency,
    NarrativeNaturalness,
    LogicalCompleteness,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::FormatCompliance,
        Criterion::MedicalValidity,
        Criterion::SemanticConsistency,
        Criterion::FactualConsistency,
        Criterion::NarrativeNaturalness,
        Criterion::LogicalCompleteness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::FormatCompliance => "format_compliance",
            Criterion::MedicalValidity => "medical_validity",
            Criterion::SemanticConsistency => "semantic_consistency",
            Criterion::FactualConsistency => "factual_consistency",
            Criterion::NarrativeNaturalness => "narrative_naturalness",
            Criterion::LogicalCompleteness => "logical_completeness",
        }
    }

    /// Match a normalized key against the canonical names and the alternate
    /// wording reviewers tend to use.
    fn from_key(key: &str) -> Option<Criterion> {
        let c = match key {
            "format_compliance" | "format" => Criterion::FormatCompliance,
            "medical_validity" | "medical_plausibility" => Criterion::MedicalValidity,
            "semantic_consistency" | "semantic_alignment" => Criterion::SemanticConsistency,
            "factual_consistency"
            | "consistency_with_extracted_result"
            | "consistency_with_the_extracted_result"
            | "result_consistency" => Criterion::FactualConsistency,
            "narrative_naturalness" | "naturalness_of_reasoning" | "naturalness" => Criterion::NarrativeNaturalness,
            "logical_completeness" | "task_usability" => Criterion::LogicalCompleteness,
            _ => return None,
        };
        Some(c)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricScores {
    pub format_compliance: u8,
    pub medical_validity: u8,
    pub semantic_consistency: u8,
    pub factual_consistency: u8,
    pub narrative_naturalness: u8,
    pub logical_completeness: u8,
    /// Criterion name (or `overall`) → comment.
    #[serde(default)]
    pub comments: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl RubricScores {
    /// All six criteria at `score`, no comments.
    pub fn uniform(score: u8) -> Self {
        let s = score.min(MAX_SCORE);
        Self {
            format_compliance: s,
            medical_validity: s,
            semantic_consistency: s,
            factual_consistency: s,
            narrative_naturalness: s,
            logical_completeness: s,
            comments: BTreeMap::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn get(&self, c: Criterion) -> u8 {
        match c {
            Criterion::FormatCompliance => self.format_compliance,
            Criterion::MedicalValidity => self.medical_validity,
            Criterion::SemanticConsistency => self.semantic_consistency,
            Criterion::FactualConsistency => self.factual_consistency,
            Criterion::NarrativeNaturalness => self.narrative_naturalness,
            Criterion::LogicalCompleteness => self.logical_completeness,
        }
    }

    pub fn set(&mut self, c: Criterion, score: u8) {
        let s = score.min(MAX_SCORE);
        match c {
            Criterion::FormatCompliance => self.format_compliance = s,
            Criterion::MedicalValidity => self.medical_validity = s,
            Criterion::SemanticConsistency => self.semantic_consistency = s,
            Criterion::FactualConsistency => self.factual_consistency = s,
            Criterion::NarrativeNaturalness => self.narrative_naturalness = s,
            Criterion::LogicalCompleteness => self.logical_completeness = s,
        }
    }

    pub fn min_score(&self) -> u8 {
        Criterion::ALL.iter().map(|c| self.get(*c)).min().unwrap_or(0)
    }

    pub fn failing(&self, threshold: u8) -> Vec<Criterion> {
        Criterion::ALL.into_iter().filter(|c| self.get(*c) < threshold).collect()
    }
}

/// True iff every criterion reaches `threshold`.
pub fn accept(scores: &RubricScores, threshold: u8) -> bool {
    scores.min_score() >= threshold
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("reviewer output is not a parseable rubric: {0}")]
pub struct ReviewParseError(pub String);

fn normalize_key(key: &str) -> String {
    let mut out = String::with_capacity(key.len());
    for ch in key.trim().chars() {
        let ch = if ch == ' ' || ch == '-' { '_' } else { ch.to_ascii_lowercase() };
        if ch == '_' && out.ends_with('_') {
            continue;
        }
        out.push(ch);
    }
    out.trim_matches('_').to_string()
}

fn criteria_in(obj: &Map<String, Value>) -> BTreeMap<Criterion, &Value> {
    obj.iter()
        .filter_map(|(k, v)| Criterion::from_key(&normalize_key(k)).map(|c| (c, v)))
        .collect()
}

const SCORE_KEYS: [&str; 3] = ["score", "value", "rating"];
const COMMENT_KEYS: [&str; 5] = ["comment", "comments", "reason", "rationale", "feedback"];

fn number_from_str(s: &str) -> Option<f64> {
    // Accept "4", "4/5", "4 out of 5".
    let head: String = s.trim().chars().take_while(|c| c.is_ascii_digit() || *c == '.' || *c == '-').collect();
    head.parse().ok()
}

fn raw_score(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => number_from_str(s),
        Value::Object(o) => SCORE_KEYS.iter().find_map(|k| o.get(*k)).and_then(raw_score),
        _ => None,
    }
}

fn inline_comment(v: &Value) -> Option<String> {
    let Value::Object(o) = v else { return None };
    COMMENT_KEYS
        .iter()
        .find_map(|k| o.get(*k))
        .and_then(Value::as_str)
        .map(str::to_string)
}

/// An object holding all six criteria, searched depth-first; returns it with
/// its parent so sibling comment maps can be used.
fn find_rubric<'a>(v: &'a Value, parent: Option<&'a Map<String, Value>>) -> Option<(&'a Map<String, Value>, Option<&'a Map<String, Value>>)> {
    match v {
        Value::Object(obj) => {
            if criteria_in(obj).len() == Criterion::ALL.len() && criteria_in(obj).values().all(|v| raw_score(v).is_some()) {
                return Some((obj, parent));
            }
            obj.values().find_map(|child| find_rubric(child, Some(obj)))
        }
        Value::Array(items) => items.iter().find_map(|child| find_rubric(child, parent)),
        _ => None,
    }
}

fn best_partial(v: &Value) -> usize {
    match v {
        Value::Object(obj) => obj.values().map(best_partial).max().unwrap_or(0).max(criteria_in(obj).len()),
        Value::Array(items) => items.iter().map(best_partial).max().unwrap_or(0),
        _ => 0,
    }
}

fn json_values(text: &str) -> impl Iterator<Item = Value> + '_ {
    text.char_indices().filter(|(_, c)| *c == '{').filter_map(|(i, _)| {
        serde_json::Deserializer::from_str(&text[i..])
            .into_iter::<Value>()
            .next()
            .and_then(Result::ok)
    })
}

/// Extract the first JSON object carrying all six criteria from free-form
/// reviewer text (prose, code fences and nesting are tolerated).
pub fn parse_review(reviewer_output: &str) -> Result<RubricScores, ReviewParseError> {
    let mut most_found = 0;
    for value in json_values(reviewer_output) {
        if let Some((obj, parent)) = find_rubric(&value, None) {
            return Ok(build_scores(obj, parent));
        }
        most_found = most_found.max(best_partial(&value));
    }
    if most_found == 0 {
        Err(ReviewParseError("no JSON object with rubric criteria found".into()))
    } else {
        Err(ReviewParseError(format!(
            "best candidate object has {most_found} of {} criteria",
            Criterion::ALL.len()
        )))
    }
}

fn build_scores(obj: &Map<String, Value>, parent: Option<&Map<String, Value>>) -> RubricScores {
    let mut scores = RubricScores::uniform(0);
    for (c, v) in criteria_in(obj) {
        let raw = raw_score(v).expect("checked in find_rubric");
        let rounded = raw.round();
        let clamped = rounded.clamp(0.0, f64::from(MAX_SCORE));
        if rounded != raw {
            scores.diagnostics.push(format!("{c}: non-integer score {raw} rounded"));
        }
        if clamped != rounded {
            scores.diagnostics.push(format!("{c}: score {raw} clamped to {clamped}"));
        }
        scores.set(c, clamped as u8);
        if let Some(comment) = inline_comment(v) {
            scores.comments.insert(c.as_str().to_string(), comment);
        }
    }

    // Comments may also sit in a sibling or nested map keyed by criterion,
    // or as one overall string.
    for source in [Some(obj), parent].into_iter().flatten() {
        for key in COMMENT_KEYS {
            match source.get(key) {
                Some(Value::Object(map)) => {
                    for (k, v) in map {
                        if let (Some(c), Some(text)) = (Criterion::from_key(&normalize_key(k)), v.as_str()) {
                            scores.comments.entry(c.as_str().to_string()).or_insert_with(|| text.to_string());
                        }
                    }
                }
                Some(Value::String(text)) => {
                    scores.comments.entry("overall".to_string()).or_insert_with(|| text.clone());
                }
                _ => {}
            }
        }
    }
    scores
}
