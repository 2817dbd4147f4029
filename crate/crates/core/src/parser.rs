//! Decomposition of raw model output into a think block and an answer payload.
//!
//! Expected shape:
//!
//! ```text
//! <think>
//! [1] Clinical scenario
//! - ...
//! [2] Candidate drugs and regimen focus
//! - ...
//! [3] Combination reasoning and clinical effect
//! - ...
//! [4] Extraction-oriented clinical summary
//! - ...
//! </think>
//! <answer>[{"drugs": ["cisplatin", "etoposide"], "label": "POS"}]</answer>
//! ```
//!
//! The extended (joint NER + RE) format wraps the answer in two regions:
//! `@ner# [...] #ner@` and `@re# [...] #re@`.
//!
//! Parsing never fails; every problem is recorded in `parse_notes` and
//! reflected in the boolean flags.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::model::{normalize_drug_name, Combination, CombinationRecord, CombinationSet, EffectLabel, NormalizationPolicy};

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";
pub const NER_OPEN: &str = "@ner#";
pub const NER_CLOSE: &str = "#ner@";
pub const RE_OPEN: &str = "@re#";
pub const RE_CLOSE: &str = "#re@";

const DRUG_KEYS: [&str; 3] = ["drugs", "combination", "entities"];
const LABEL_KEYS: [&str; 4] = ["label", "relation", "class", "effect"];
const ENTITY_KEYS: [&str; 4] = ["name", "text", "entity", "drug"];

pub const SECTION_COUNT: usize = 4;

// "[k]" at line start, optionally followed by "." or ":" and a title.
static SECTION_HEADER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\[([1-4])\]").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    #[default]
    Standard,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinkStructureReport {
    pub sections_present: [bool; SECTION_COUNT],
    pub sections_in_order: bool,
    pub bullets_per_section: [usize; SECTION_COUNT],
    pub word_count: usize,
}

impl ThinkStructureReport {
    pub fn present_count(&self) -> usize {
        self.sections_present.iter().filter(|p| **p).count()
    }

    /// True when every present section carries at least one bullet.
    pub fn present_sections_have_bullets(&self) -> bool {
        self.sections_present
            .iter()
            .zip(self.bullets_per_section)
            .all(|(present, bullets)| !present || bullets > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub has_think: bool,
    pub has_answer: bool,
    pub think_text: Option<String>,
    pub think_report: Option<ThinkStructureReport>,
    /// Present only when an answer block was found and its payload is valid.
    pub combinations: Option<CombinationSet>,
    /// Present only when NER markers were found and their region parsed.
    pub ner_entities: Option<BTreeSet<String>>,
    pub answer_json_valid: bool,
    pub parse_notes: Vec<String>,
}

impl ParsedResponse {
    /// Predicted combinations, with an invalid or missing payload read as `NO_COMB`.
    pub fn predictions(&self) -> CombinationSet {
        self.combinations.clone().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnswerPayload {
    pub combinations: CombinationSet,
    pub ner_entities: Option<BTreeSet<String>>,
    pub json_valid: bool,
    pub notes: Vec<String>,
}

/// Byte range of a tag pair's content plus the end of the closing tag.
struct TagSpan {
    content: std::ops::Range<usize>,
    close_end: usize,
}

/// `haystack` is the ASCII-lowercased input, so byte offsets match the original.
fn find_pair(haystack: &str, open: &str, close: &str, from: usize) -> Option<TagSpan> {
    let open_start = from + haystack[from..].find(open)?;
    let content_start = open_start + open.len();
    let close_start = content_start + haystack[content_start..].find(close)?;
    Some(TagSpan {
        content: content_start..close_start,
        close_end: close_start + close.len(),
    })
}

pub fn parse_response(raw: &str, policy: &NormalizationPolicy, mode: ParseMode) -> ParsedResponse {
    let lower = raw.to_ascii_lowercase();
    let mut notes = Vec::new();

    let think = find_pair(&lower, THINK_OPEN, THINK_CLOSE, 0);
    if think.is_none() {
        match (lower.find(THINK_OPEN), lower.find(THINK_CLOSE)) {
            (Some(_), _) => notes.push("unterminated <think> block".to_string()),
            (None, Some(_)) => notes.push("</think> without opening tag".to_string()),
            (None, None) => notes.push("no <think> block".to_string()),
        }
    }
    let think_text = think.as_ref().map(|t| raw[t.content.clone()].to_string());
    let think_report = think_text.as_deref().map(analyze_think);

    let answer_from = think.as_ref().map_or(0, |t| t.close_end);
    let answer = find_pair(&lower, ANSWER_OPEN, ANSWER_CLOSE, answer_from);
    if answer.is_none() {
        if answer_from > 0 && find_pair(&lower, ANSWER_OPEN, ANSWER_CLOSE, 0).is_some() {
            notes.push("<answer> block precedes </think>; ignored".to_string());
        } else if lower[answer_from..].contains(ANSWER_OPEN) {
            notes.push("unterminated <answer> block".to_string());
        } else {
            notes.push("no <answer> block".to_string());
        }
    }

    let mut parsed = ParsedResponse {
        has_think: think.is_some(),
        has_answer: answer.is_some(),
        think_text,
        think_report,
        combinations: None,
        ner_entities: None,
        answer_json_valid: false,
        parse_notes: Vec::new(),
    };

    if let Some(span) = answer {
        let content = &raw[span.content.clone()];
        if lower[span.content.clone()].contains(ANSWER_OPEN) {
            notes.push("nested <answer> tag inside the first answer block".to_string());
        }
        if lower[span.close_end..].contains(ANSWER_OPEN) {
            notes.push("additional <answer> block ignored".to_string());
        }

        let payload = parse_answer_payload(content, policy, mode);
        notes.extend(payload.notes);
        parsed.answer_json_valid = payload.json_valid;
        if payload.json_valid {
            parsed.combinations = Some(payload.combinations);
            parsed.ner_entities = payload.ner_entities;
        }
    }

    parsed.parse_notes = notes;
    parsed
}

/// Strip a surrounding Markdown code fence, if any.
fn strip_code_fence(text: &str) -> Option<&str> {
    let trimmed = text.trim();
    let rest = trimmed.strip_prefix("```")?;
    let body = match rest.find('\n') {
        Some(nl) => &rest[nl + 1..],
        None => rest,
    };
    Some(body.trim_end().strip_suffix("```").unwrap_or(body).trim())
}

pub fn parse_answer_payload(answer_text: &str, policy: &NormalizationPolicy, mode: ParseMode) -> AnswerPayload {
    let mut payload = AnswerPayload::default();
    match mode {
        ParseMode::Standard => {
            let (combinations, valid) = parse_relation_region(answer_text, policy, &mut payload.notes);
            payload.combinations = combinations;
            payload.json_valid = valid;
        }
        ParseMode::Extended => {
            let lower = answer_text.to_ascii_lowercase();

            let ner_ok = match find_pair(&lower, NER_OPEN, NER_CLOSE, 0) {
                Some(span) => {
                    let entities = parse_entity_region(&answer_text[span.content], policy, &mut payload.notes);
                    let ok = entities.is_some();
                    payload.ner_entities = entities;
                    ok
                }
                None => {
                    payload.notes.push("missing @ner# ... #ner@ region".to_string());
                    false
                }
            };

            let re_ok = match find_pair(&lower, RE_OPEN, RE_CLOSE, 0) {
                Some(span) => {
                    let (combinations, valid) =
                        parse_relation_region(&answer_text[span.content], policy, &mut payload.notes);
                    payload.combinations = combinations;
                    valid
                }
                None => {
                    payload.notes.push("missing @re# ... #re@ region".to_string());
                    false
                }
            };

            payload.json_valid = ner_ok && re_ok;
        }
    }
    payload
}

fn parse_json_region(text: &str, notes: &mut Vec<String>) -> Option<Value> {
    let body = match strip_code_fence(text) {
        Some(inner) => {
            notes.push("code fence stripped from answer".to_string());
            inner
        }
        None => text.trim(),
    };
    match serde_json::from_str::<Value>(body) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("invalid JSON: {e}"));
            None
        }
    }
}

fn parse_relation_region(text: &str, policy: &NormalizationPolicy, notes: &mut Vec<String>) -> (CombinationSet, bool) {
    let Some(value) = parse_json_region(text, notes) else {
        return (CombinationSet::new(), false);
    };
    match value {
        Value::Array(items) => (read_combinations(&items, policy, notes), true),
        Value::Object(obj) => {
            notes.push("answer is a single object, read as a one-element array".to_string());
            (read_combinations(&[Value::Object(obj)], policy, notes), true)
        }
        other => {
            notes.push(format!("answer JSON must be an array, got {}", json_kind(&other)));
            (CombinationSet::new(), false)
        }
    }
}

fn parse_entity_region(text: &str, policy: &NormalizationPolicy, notes: &mut Vec<String>) -> Option<BTreeSet<String>> {
    let value = parse_json_region(text, notes)?;
    let Value::Array(items) = value else {
        notes.push(format!("NER region must be an array, got {}", json_kind(&value)));
        return None;
    };
    let mut entities = BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        let name = match item {
            Value::String(s) => Some(s.as_str()),
            Value::Object(obj) => first_key(obj, &ENTITY_KEYS).and_then(Value::as_str),
            _ => None,
        };
        match name.map(|n| normalize_drug_name(n, policy)) {
            Some(Ok(n)) => {
                entities.insert(n);
            }
            Some(Err(_)) => notes.push(format!("NER entity {i} is empty; skipped")),
            None => notes.push(format!("NER entity {i} is not a name; skipped")),
        }
    }
    Some(entities)
}

fn json_kind(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Value of the first key in `keys` present in `obj`, compared case-insensitively.
fn first_key<'a>(obj: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| {
        obj.get(*k)
            .or_else(|| obj.iter().find(|(name, _)| name.eq_ignore_ascii_case(k)).map(|(_, v)| v))
    })
}

fn read_combinations(items: &[Value], policy: &NormalizationPolicy, notes: &mut Vec<String>) -> CombinationSet {
    let mut set = CombinationSet::new();
    for (i, item) in items.iter().enumerate() {
        let Value::Object(obj) = item else {
            notes.push(format!("dropped: element {i} is not an object"));
            continue;
        };

        let raw_drugs = first_key(obj, &DRUG_KEYS);
        let names: Vec<&str> = match raw_drugs {
            Some(Value::Array(values)) => values
                .iter()
                .filter_map(|v| {
                    let s = v.as_str();
                    if s.is_none() {
                        notes.push(format!("element {i}: non-string drug ignored"));
                    }
                    s
                })
                .collect(),
            Some(Value::Null) | None => Vec::new(),
            Some(_) => {
                notes.push(format!("dropped: element {i} drug list is not an array"));
                continue;
            }
        };

        let label = match first_key(obj, &LABEL_KEYS) {
            Some(Value::String(s)) => match s.parse::<EffectLabel>() {
                Ok(l) => l,
                Err(_) => {
                    notes.push(format!("dropped: element {i} has unknown label {s:?}"));
                    continue;
                }
            },
            Some(_) => {
                notes.push(format!("dropped: element {i} label is not a string"));
                continue;
            }
            None => {
                notes.push(format!("dropped: element {i} has no label"));
                continue;
            }
        };

        if label == EffectLabel::NoComb {
            if !names.is_empty() {
                notes.push(format!("dropped: element {i} attaches NO_COMB to drugs"));
            }
            continue;
        }

        let mut drugs = BTreeSet::new();
        for name in names {
            match normalize_drug_name(name, policy) {
                Ok(n) => {
                    drugs.insert(n);
                }
                Err(_) => notes.push(format!("element {i}: empty drug name ignored")),
            }
        }
        if drugs.len() < 2 {
            notes.push(format!("dropped: arity<2 (element {i})"));
            continue;
        }
        let combination = Combination::new(drugs, label).expect("arity and label checked above");
        if !set.insert(combination) {
            notes.push(format!("duplicate combination at element {i} removed"));
        }
    }
    set
}

pub fn analyze_think(think_text: &str) -> ThinkStructureReport {
    let mut present = [false; SECTION_COUNT];
    let mut bullets = [0usize; SECTION_COUNT];
    let mut first_seen: Vec<usize> = Vec::with_capacity(SECTION_COUNT);
    let mut current: Option<usize> = None;

    for line in think_text.lines() {
        if let Some(caps) = SECTION_HEADER.captures(line) {
            let k: usize = caps[1].parse().expect("regex restricts to 1-4");
            let idx = k - 1;
            if !present[idx] {
                present[idx] = true;
                first_seen.push(k);
            }
            current = Some(idx);
        } else if line.trim_start().starts_with("- ") {
            if let Some(idx) = current {
                bullets[idx] += 1;
            }
        }
    }

    ThinkStructureReport {
        sections_present: present,
        sections_in_order: first_seen.windows(2).all(|w| w[0] < w[1]),
        bullets_per_section: bullets,
        word_count: think_text.split_whitespace().count(),
    }
}

/// Canonical answer JSON: a compact array of `{"drugs": [...], "label": "..."}`
/// with drugs sorted and combinations in set order.
pub fn to_answer_json(combinations: &CombinationSet) -> String {
    let records: Vec<CombinationRecord> = combinations.iter().map(CombinationRecord::from).collect();
    serde_json::to_string(&records).expect("string-only records always serialize")
}

/// Canonical extended answer with both marker regions.
pub fn to_extended_answer(entities: &BTreeSet<String>, combinations: &CombinationSet) -> String {
    let ner = serde_json::to_string(entities).expect("string set always serializes");
    format!("{NER_OPEN} {ner} {NER_CLOSE}\n{RE_OPEN} {} {RE_CLOSE}", to_answer_json(combinations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> NormalizationPolicy {
        NormalizationPolicy::default()
    }

    fn comb(drugs: &[&str], label: EffectLabel) -> Combination {
        Combination::new(drugs.iter().copied(), label).unwrap()
    }

    #[test]
    fn full_response_fixture() {
        let raw = "<think>[1]...\n- a\n[2]...\n- b\n[3]...\n- c\n[4]...\n- d</think><answer>[{\"drugs\":[\"cisplatin\",\"etoposide\"],\"label\":\"POS\"}]</answer>";
        let parsed = parse_response(raw, &policy(), ParseMode::Standard);

        let expected_report = ThinkStructureReport {
            sections_present: [true; 4],
            sections_in_order: true,
            bullets_per_section: [1, 1, 1, 1],
            word_count: 12,
        };
        let expected_combos: CombinationSet = [comb(&["cisplatin", "etoposide"], EffectLabel::Pos)].into();

        assert!(parsed.has_think);
        assert!(parsed.has_answer);
        assert!(parsed.answer_json_valid);
        assert_eq!(parsed.think_text.as_deref(), Some("[1]...\n- a\n[2]...\n- b\n[3]...\n- c\n[4]...\n- d"));
        assert_eq!(parsed.think_report, Some(expected_report));
        assert_eq!(parsed.combinations, Some(expected_combos));
        assert_eq!(parsed.ner_entities, None);
    }

    #[test]
    fn answer_only_empty_array_is_no_comb() {
        let parsed = parse_response("<answer>[]</answer>", &policy(), ParseMode::Standard);
        assert!(!parsed.has_think);
        assert!(parsed.has_answer);
        assert_eq!(parsed.combinations, Some(CombinationSet::new()));
    }

    #[test]
    fn untagged_text() {
        let parsed = parse_response("no tags at all", &policy(), ParseMode::Standard);
        assert!(!parsed.has_think);
        assert!(!parsed.has_answer);
        assert_eq!(parsed.combinations, None);
        assert!(parsed.parse_notes.iter().any(|n| n.contains("no <answer>")));
    }

    #[test]
    fn missing_answer_close_means_no_answer() {
        let parsed = parse_response("<think>[1] x\n- y</think><answer>[]", &policy(), ParseMode::Standard);
        assert!(parsed.has_think);
        assert!(!parsed.has_answer);
        assert!(parsed.parse_notes.iter().any(|n| n.contains("unterminated <answer>")));
    }

    #[test]
    fn extra_and_nested_answer_blocks() {
        let raw = "<answer>[{\"drugs\":[\"a\",\"b\"],\"label\":\"POS\"}]</answer><answer>[]</answer>";
        let parsed = parse_response(raw, &policy(), ParseMode::Standard);
        assert_eq!(parsed.combinations.unwrap().len(), 1);
        assert!(parsed.parse_notes.iter().any(|n| n.contains("additional <answer>")));

        let nested = parse_response("<answer><answer>[]</answer></answer>", &policy(), ParseMode::Standard);
        assert!(nested.has_answer);
        assert!(!nested.answer_json_valid);
        assert!(nested.parse_notes.iter().any(|n| n.contains("nested")));
    }

    #[test]
    fn tags_are_case_insensitive() {
        let parsed = parse_response("<THINK>[1] a\n- b</Think><Answer>[]</ANSWER>", &policy(), ParseMode::Standard);
        assert!(parsed.has_think && parsed.has_answer && parsed.answer_json_valid);
    }

    #[test]
    fn answer_before_think_is_ignored() {
        let parsed = parse_response("<answer>[]</answer><think>[1] a</think>", &policy(), ParseMode::Standard);
        assert!(parsed.has_think);
        assert!(!parsed.has_answer);
        assert!(parsed.parse_notes.iter().any(|n| n.contains("precedes")));
    }

    #[test]
    fn payload_tolerant_keys_and_labels() {
        let p = parse_answer_payload(r#"[{"drugs":["A","B"],"label":"pos"}]"#, &policy(), ParseMode::Standard);
        assert!(p.json_valid);
        assert_eq!(p.combinations, [comb(&["a", "b"], EffectLabel::Pos)].into());

        let p = parse_answer_payload(
            r#"[{"Combination":["A","B","C"],"Relation":"neg_comb"},{"entities":["x","y"],"effect":"COMB"}]"#,
            &policy(),
            ParseMode::Standard,
        );
        assert_eq!(
            p.combinations,
            [comb(&["a", "b", "c"], EffectLabel::Neg), comb(&["x", "y"], EffectLabel::Comb)].into()
        );
    }

    #[test]
    fn payload_key_priority() {
        let p = parse_answer_payload(
            r#"[{"entities":["q","r"],"drugs":["a","b"],"class":"COMB","label":"POS"}]"#,
            &policy(),
            ParseMode::Standard,
        );
        assert_eq!(p.combinations, [comb(&["a", "b"], EffectLabel::Pos)].into());
    }

    #[test]
    fn payload_extended_markers() {
        let p = parse_answer_payload(
            r#"@ner# ["A","B","C"] #ner@ @re# [{"drugs":["A","B"],"label":"POS"}] #re@"#,
            &policy(),
            ParseMode::Extended,
        );
        assert!(p.json_valid);
        assert_eq!(p.ner_entities, Some(["a", "b", "c"].iter().map(|s| s.to_string()).collect()));
        assert_eq!(p.combinations, [comb(&["a", "b"], EffectLabel::Pos)].into());
    }

    #[test]
    fn payload_extended_missing_region() {
        let p = parse_answer_payload(r#"@re# [] #re@"#, &policy(), ParseMode::Extended);
        assert!(!p.json_valid);
        assert_eq!(p.ner_entities, None);
        assert!(p.notes.iter().any(|n| n.contains("missing @ner#")));

        let p = parse_answer_payload(r#"@ner# ["a"] #ner@"#, &policy(), ParseMode::Extended);
        assert!(!p.json_valid);
        assert!(p.ner_entities.is_some());
        assert!(p.notes.iter().any(|n| n.contains("missing @re#")));
    }

    #[test]
    fn payload_arity_below_two_dropped() {
        let p = parse_answer_payload(r#"[{"drugs":["A"],"label":"POS"}]"#, &policy(), ParseMode::Standard);
        assert!(p.json_valid);
        assert!(p.combinations.is_empty());
        assert!(p.notes.iter().any(|n| n.contains("dropped: arity<2")));
    }

    #[test]
    fn payload_no_comb_object_maps_to_empty() {
        for text in [r#"[{"drugs":[],"label":"NO_COMB"}]"#, r#"{"label":"NO_COMB"}"#] {
            let p = parse_answer_payload(text, &policy(), ParseMode::Standard);
            assert!(p.json_valid, "{text}");
            assert!(p.combinations.is_empty());
        }
        let p = parse_answer_payload(r#"[{"drugs":["a","b"],"label":"NO_COMB"}]"#, &policy(), ParseMode::Standard);
        assert!(p.combinations.is_empty());
        assert!(p.notes.iter().any(|n| n.contains("NO_COMB")));
    }

    #[test]
    fn payload_rejects_non_json_and_non_arrays() {
        let p = parse_answer_payload("POS: a + b", &policy(), ParseMode::Standard);
        assert!(!p.json_valid);
        let p = parse_answer_payload("\"text\"", &policy(), ParseMode::Standard);
        assert!(!p.json_valid);
        let p = parse_answer_payload("", &policy(), ParseMode::Standard);
        assert!(!p.json_valid);
    }

    #[test]
    fn payload_deduplicates_and_skips_bad_elements() {
        let p = parse_answer_payload(
            r#"[{"drugs":["A","B"],"label":"POS"},{"drugs":["b"," a "],"label":"POS"},3,{"drugs":["a","c"],"label":"synergy"},{"drugs":["a","c"]}]"#,
            &policy(),
            ParseMode::Standard,
        );
        assert!(p.json_valid);
        assert_eq!(p.combinations.len(), 1);
        assert!(p.notes.iter().any(|n| n.contains("duplicate")));
        assert!(p.notes.iter().any(|n| n.contains("not an object")));
        assert!(p.notes.iter().any(|n| n.contains("unknown label")));
        assert!(p.notes.iter().any(|n| n.contains("no label")));
    }

    #[test]
    fn payload_code_fence() {
        let p = parse_answer_payload("```json\n[{\"drugs\":[\"a\",\"b\"],\"label\":\"OTHER\"}]\n```", &policy(), ParseMode::Standard);
        assert!(p.json_valid);
        assert_eq!(p.combinations.len(), 1);
    }

    #[test]
    fn think_all_sections() {
        let text = "[1] Clinical scenario\n- one\n[2] Candidates\n- two\n[3] Reasoning\n- three\n[4] Summary\n- four";
        let r = analyze_think(text);
        assert_eq!(r.sections_present, [true; 4]);
        assert!(r.sections_in_order);
        assert_eq!(r.bullets_per_section, [1, 1, 1, 1]);
        assert_eq!(r.word_count, 17);
    }

    #[test]
    fn think_empty() {
        let r = analyze_think("");
        assert_eq!(r.sections_present, [false; 4]);
        assert_eq!(r.bullets_per_section, [0; 4]);
        assert_eq!(r.word_count, 0);
    }

    #[test]
    fn think_partial_sections() {
        let r = analyze_think("[1] a\n- x\n[3] c\n- y\n- z");
        assert_eq!(r.sections_present, [true, false, true, false]);
        assert!(r.sections_in_order);
        assert_eq!(r.bullets_per_section, [1, 0, 2, 0]);
    }

    #[test]
    fn think_header_variants_and_order() {
        let r = analyze_think("  [2]. b\n- x\n[1]: a\n- y\nsee [3] inline\n[4]\n");
        assert_eq!(r.sections_present, [true, true, false, true]);
        assert!(!r.sections_in_order);
        assert_eq!(r.bullets_per_section, [1, 1, 0, 0]);
    }

    #[test]
    fn think_bullets_before_headers_are_not_counted() {
        let r = analyze_think("- stray\n[1] a\n-not a bullet\n- bullet");
        assert_eq!(r.bullets_per_section, [1, 0, 0, 0]);
    }

    #[test]
    fn bullets_zero_when_section_absent() {
        let r = analyze_think("[2] b\n- x\n- y");
        for i in 0..4 {
            if !r.sections_present[i] {
                assert_eq!(r.bullets_per_section[i], 0);
            }
        }
    }

    #[test]
    fn canonical_answer_json_is_compact_and_sorted() {
        let set: CombinationSet = [comb(&["b", "a"], EffectLabel::Pos), comb(&["c", "a", "b"], EffectLabel::Comb)].into();
        assert_eq!(
            to_answer_json(&set),
            r#"[{"drugs":["a","b"],"label":"POS"},{"drugs":["a","b","c"],"label":"COMB"}]"#
        );
        assert_eq!(to_answer_json(&CombinationSet::new()), "[]");
    }

    #[test]
    fn extended_answer_round_trip() {
        let set: CombinationSet = [comb(&["a", "b"], EffectLabel::Pos)].into();
        let ents: BTreeSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let text = to_extended_answer(&ents, &set);
        let p = parse_answer_payload(&text, &policy(), ParseMode::Extended);
        assert!(p.json_valid);
        assert_eq!(p.combinations, set);
        assert_eq!(p.ner_entities, Some(ents));
    }
}
