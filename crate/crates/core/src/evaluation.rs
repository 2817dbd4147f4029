//! Corpus-level evaluation of predictions against canonical gold.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{corpus_f1, ddi_micro_f1, ner_f1, MatchConfig, Prf};
use crate::model::{normalize_drug_name, CombinationSet, Instance, NormalizationPolicy, TaskMode};
use crate::parser::{parse_response, ParseMode};

/// One line of a prediction file.
///
/// Either `gold` (aliases `combinations`, `predictions`) carries the
/// predicted set directly, or `response` carries raw model output that is
/// parsed first. `entities` enables NER scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(default, alias = "combinations", alias = "predictions", skip_serializing_if = "Option::is_none")]
    pub gold: Option<CombinationSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<BTreeSet<String>>,
}

impl PredictionRecord {
    /// Predicted combinations and entity list after normalization. Raw
    /// responses that fail to parse yield an empty prediction.
    fn resolve(&self, policy: &NormalizationPolicy) -> Result<(CombinationSet, Option<BTreeSet<String>>)> {
        let (combos, parsed_entities) = match (&self.gold, &self.response) {
            (Some(set), _) => (renormalize(set, policy)?, None),
            (None, Some(text)) => {
                let mode = if text.contains(crate::parser::NER_OPEN) { ParseMode::Extended } else { ParseMode::Standard };
                let parsed = parse_response(text, policy, mode);
                (parsed.predictions(), parsed.ner_entities)
            }
            (None, None) => (CombinationSet::new(), None),
        };
        let entities = match &self.entities {
            Some(list) => Some(normalize_names(list, policy)?),
            None => parsed_entities,
        };
        Ok((combos, entities))
    }
}

fn renormalize(set: &CombinationSet, policy: &NormalizationPolicy) -> Result<CombinationSet> {
    set.iter().map(|c| c.renormalized(policy)).collect()
}

fn normalize_names(names: &BTreeSet<String>, policy: &NormalizationPolicy) -> Result<BTreeSet<String>> {
    names.iter().map(|n| normalize_drug_name(n, policy)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub name: String,
    /// `None` for typed DDI micro-F1 and NER F1, which take no match config.
    pub config: Option<MatchConfig>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub pred_count: f64,
    pub gold_count: f64,
}

impl MetricEntry {
    fn new(name: &str, config: Option<MatchConfig>, prf: Prf) -> Self {
        Self {
            name: name.to_string(),
            config,
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
            pred_count: prf.pred_count,
            gold_count: prf.gold_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mode: TaskMode,
    pub instances: usize,
    pub metrics: Vec<MetricEntry>,
}

impl EvaluationReport {
    pub fn get(&self, name: &str) -> Option<&MetricEntry> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn render_table(&self) -> String {
        let width = self.metrics.iter().map(|m| m.name.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>9}  {:>9}  {:>9}\n", "Metric", "Precision", "Recall", "F1");
        for m in &self.metrics {
            out.push_str(&format!(
                "{:<width$}  {:>9.6}  {:>9.6}  {:>9.6}\n",
                m.name, m.precision, m.recall, m.f1
            ));
        }
        out
    }
}

/// Pairs each gold instance with its prediction by id. Every id must appear
/// on both sides.
pub fn align<'a>(
    predictions: &'a [PredictionRecord],
    gold: &'a [Instance],
) -> Result<Vec<(&'a PredictionRecord, &'a Instance)>> {
    let by_id: BTreeMap<&str, &PredictionRecord> = predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let gold_ids: HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    let missing_in_predictions: Vec<String> = gold
        .iter()
        .filter(|g| !by_id.contains_key(g.id.as_str()))
        .map(|g| g.id.clone())
        .collect();
    let missing_in_gold: Vec<String> = by_id.keys().filter(|id| !gold_ids.contains(*id)).map(|id| id.to_string()).collect();
    if !missing_in_predictions.is_empty() || !missing_in_gold.is_empty() {
        return Err(Error::IdMismatch {
            missing_in_predictions,
            missing_in_gold,
        });
    }
    Ok(gold.iter().map(|g| (by_id[g.id.as_str()], g)).collect())
}

/// DrugComb: Pos/Any × Exact/Partial. DDI13: typed micro P/R/F1. NER F1 is
/// added when every gold instance carries an entity list and at least one
/// prediction does.
pub fn evaluate_corpus(
    predictions: &[PredictionRecord],
    gold: &[Instance],
    mode: TaskMode,
    policy: &NormalizationPolicy,
) -> Result<EvaluationReport> {
    if gold.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let pairs = align(predictions, gold)?;

    let mut pred_sets = Vec::with_capacity(pairs.len());
    let mut gold_sets = Vec::with_capacity(pairs.len());
    let mut ner_pairs = Vec::new();
    let mut any_pred_entities = false;
    for (p, g) in &pairs {
        if g.mode != mode {
            return Err(Error::InvalidConfig(format!("instance {} is {} but evaluation mode is {mode}", g.id, g.mode)));
        }
        let (combos, entities) = p.resolve(policy)?;
        pred_sets.push(combos);
        gold_sets.push(renormalize(&g.gold, policy)?);
        any_pred_entities |= entities.is_some();
        if let Some(gold_entities) = &g.entity_hints {
            ner_pairs.push((entities.unwrap_or_default(), normalize_names(gold_entities, policy)?));
        }
    }
    let corpus = || pred_sets.iter().zip(gold_sets.iter());

    let mut metrics = Vec::new();
    match mode {
        TaskMode::DrugComb => {
            for (name, cfg) in [
                ("Pos-Exact", MatchConfig::pos_exact()),
                ("Pos-Partial", MatchConfig::pos_partial()),
                ("Any-Exact", MatchConfig::any_exact()),
                ("Any-Partial", MatchConfig::any_partial()),
            ] {
                metrics.push(MetricEntry::new(name, Some(cfg), corpus_f1(corpus(), &cfg)?));
            }
        }
        TaskMode::Ddi13 => metrics.push(MetricEntry::new("DDI-Micro", None, ddi_micro_f1(corpus())?)),
    }

    if any_pred_entities && ner_pairs.len() == pairs.len() {
        let (mut tp, mut pc, mut gc) = (0.0, 0.0, 0.0);
        for (p, g) in &ner_pairs {
            let prf = ner_f1(p, g);
            tp += prf.tp_mass;
            pc += prf.pred_count;
            gc += prf.gold_count;
        }
        metrics.push(MetricEntry::new("NER", None, Prf::from_masses(tp, tp, pc, gc)));
    }

    Ok(EvaluationReport {
        mode,
        instances: pairs.len(),
        metrics,
    })
}

/// Read a prediction file. Duplicate ids are rejected.
pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_prediction_line(&line).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            field: "<record>".into(),
            message,
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: i + 1,
                id: record.id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn parse_prediction_jsonl(text: &str) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_prediction_line(line).map_err(|message| Error::Parse {
            path: "<predictions>".into(),
            line: i + 1,
            field: "<record>".into(),
            message,
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId {
                path: "<predictions>".into(),
                line: i + 1,
                id: record.id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

fn parse_prediction_line(line: &str) -> std::result::Result<PredictionRecord, String> {
    serde_json::from_str(line).map_err(|e| e.to_string())
}
