//! Rollout rewards: structural format, combination coverage, and a metric
//! reward built from exact/partial F1, combined with fixed weights; plus
//! group-relative advantage normalization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ddi_pair_counts, instance_prf, ner_f1, MatchConfig, PairCounts};
use crate::model::{CombinationSet, TaskMode};
use crate::parser::ParsedResponse;

pub const DEFAULT_EPSILON_STD: f64 = 1e-8;
const SUM_TOLERANCE: f64 = 1e-9;

/// Coverage reward for the two cases the coverage average leaves undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageConventions {
    /// No predictions and no gold (a correct `NO_COMB`).
    pub both_empty: f64,
    /// Predictions made on an instance with no gold combinations.
    pub no_gold: f64,
}

impl Default for CoverageConventions {
    fn default() -> Self {
        Self {
            both_empty: 1.0,
            no_gold: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub alpha_format: f64,
    pub alpha_cover: f64,
    pub alpha_metric: f64,
    pub metric_exact_weight: f64,
    pub metric_partial_weight: f64,
    /// Weight of the optional NER F1 term; 0 disables it. When enabled the
    /// weighted sum is divided by `1 + ner_weight`.
    pub ner_weight: f64,
    pub coverage: CoverageConventions,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha_format: 0.2,
            alpha_cover: 0.1,
            alpha_metric: 0.7,
            metric_exact_weight: 2.0 / 3.0,
            metric_partial_weight: 1.0 / 3.0,
            ner_weight: 0.0,
            coverage: CoverageConventions::default(),
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("alpha_format", self.alpha_format),
            ("alpha_cover", self.alpha_cover),
            ("alpha_metric", self.alpha_metric),
            ("metric_exact_weight", self.metric_exact_weight),
            ("metric_partial_weight", self.metric_partial_weight),
            ("ner_weight", self.ner_weight),
        ];
        if let Some((name, w)) = all.iter().find(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(format!("{name} = {w} must be finite and >= 0")));
        }
        let alphas = self.alpha_format + self.alpha_cover + self.alpha_metric;
        if (alphas - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("alpha weights sum to {alphas}, expected 1")));
        }
        let metric = self.metric_exact_weight + self.metric_partial_weight;
        if (metric - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("metric weights sum to {metric}, expected 1")));
        }
        for (name, v) in [
            ("coverage.both_empty", self.coverage.both_empty),
            ("coverage.no_gold", self.coverage.no_gold),
        ] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvalidWeights(format!("{name} = {v} must lie in [-1, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormatScore {
    pub r_format: f64,
    pub s_t: f64,
    pub s_a: f64,
    pub i_tag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_format: f64,
    pub r_cover: f64,
    pub r_metric: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_ner: Option<f64>,
    pub r_total: f64,
    pub s_t: f64,
    pub s_a: f64,
    pub i_tag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1_partial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_counts: Option<PairCounts>,
    pub diagnostics: Vec<String>,
}

/// Structural score: 0 without both tag pairs, otherwise `0.5 + s_t + s_a`
/// with `s_t, s_a ∈ [0, 0.25]`.
///
/// `s_t` is a quarter of the fraction of the four sections present, halved
/// when they are out of order and halved again when some present section has
/// no bullet. `s_a` is 0.25 for a valid answer payload.
pub fn format_reward(parsed: &ParsedResponse) -> FormatScore {
    let i_tag = parsed.has_think && parsed.has_answer;
    if !i_tag {
        return FormatScore {
            r_format: 0.0,
            s_t: 0.0,
            s_a: 0.0,
            i_tag,
        };
    }
    let s_t = parsed.think_report.as_ref().map_or(0.0, |report| {
        let coverage = report.present_count() as f64 / 4.0;
        let order = if report.sections_in_order { 1.0 } else { 0.5 };
        let bullets = if report.present_sections_have_bullets() { 1.0 } else { 0.5 };
        0.25 * coverage * order * bullets
    });
    let s_a = if parsed.answer_json_valid { 0.25 } else { 0.0 };
    FormatScore {
        r_format: 0.5 + s_t + s_a,
        s_t,
        s_a,
        i_tag,
    }
}

/// Average over predictions of the best fraction of any gold drug set they
/// cover, with -1 for an empty prediction on an instance that has gold.
/// Labels are ignored.
pub fn coverage_reward(preds: &CombinationSet, golds: &CombinationSet, conventions: &CoverageConventions) -> f64 {
    match (preds.is_empty(), golds.is_empty()) {
        (true, false) => -1.0,
        (true, true) => conventions.both_empty,
        (false, true) => conventions.no_gold,
        (false, false) => {
            let total: f64 = preds
                .iter()
                .map(|p| {
                    golds
                        .iter()
                        .map(|g| p.shared_with(g) as f64 / g.arity() as f64)
                        .fold(0.0, f64::max)
                })
                .sum();
            total / preds.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct MetricScore {
    value: f64,
    f1_exact: Option<f64>,
    f1_partial: Option<f64>,
    pair_counts: Option<PairCounts>,
}

fn metric_score(preds: &CombinationSet, golds: &CombinationSet, weights: &RewardWeights, mode: TaskMode) -> MetricScore {
    match mode {
        TaskMode::DrugComb => {
            let exact = instance_prf(preds, golds, &MatchConfig::any_exact().label_sensitive(true)).f1;
            let partial = instance_prf(preds, golds, &MatchConfig::any_partial().label_sensitive(true)).f1;
            MetricScore {
                value: weights.metric_exact_weight * exact + weights.metric_partial_weight * partial,
                f1_exact: Some(exact),
                f1_partial: Some(partial),
                pair_counts: None,
            }
        }
        TaskMode::Ddi13 => {
            let counts = ddi_pair_counts(preds, golds);
            MetricScore {
                value: counts.prf().f1,
                f1_exact: None,
                f1_partial: None,
                pair_counts: Some(counts),
            }
        }
    }
}

/// DrugComb: weighted exact/partial F1 over all combinations with collapsed
/// labels required to agree. DDI13: typed-pair F1 of the single instance.
pub fn metric_reward(preds: &CombinationSet, golds: &CombinationSet, weights: &RewardWeights, mode: TaskMode) -> f64 {
    metric_score(preds, golds, weights, mode).value
}

pub fn combined_reward(
    parsed: &ParsedResponse,
    golds: &CombinationSet,
    weights: &RewardWeights,
    mode: TaskMode,
) -> RewardBreakdown {
    combined_reward_with_entities(parsed, golds, None, weights, mode)
}

/// [`combined_reward`] with gold entity names for the optional NER term.
pub fn combined_reward_with_entities(
    parsed: &ParsedResponse,
    golds: &CombinationSet,
    gold_entities: Option<&BTreeSet<String>>,
    weights: &RewardWeights,
    mode: TaskMode,
) -> RewardBreakdown {
    let format = format_reward(parsed);
    let preds = parsed.predictions();
    let r_cover = coverage_reward(&preds, golds, &weights.coverage);
    let metric = metric_score(&preds, golds, weights, mode);

    let mut diagnostics = Vec::new();
    if parsed.combinations.is_none() {
        diagnostics.push("no valid answer payload; predictions read as empty".to_string());
    }

    let r_ner = if weights.ner_weight > 0.0 {
        match gold_entities {
            Some(gold) => {
                let empty = BTreeSet::new();
                let predicted = parsed.ner_entities.as_ref().unwrap_or(&empty);
                Some(ner_f1(predicted, gold).f1)
            }
            None => {
                diagnostics.push("ner_weight > 0 but no gold entities supplied; NER term skipped".to_string());
                None
            }
        }
    } else {
        None
    };

    let weighted = weights.alpha_format * format.r_format + weights.alpha_cover * r_cover + weights.alpha_metric * metric.value;
    let r_total = match r_ner {
        Some(n) => (weighted + weights.ner_weight * n) / (1.0 + weights.ner_weight),
        None => weighted,
    };

    diagnostics.push(format!(
        "r_format={:.6} (s_t={:.6}, s_a={:.6}, i_tag={})",
        format.r_format, format.s_t, format.s_a, format.i_tag
    ));
    diagnostics.push(format!("r_cover={r_cover:.6} over {} predictions", preds.len()));
    match (metric.f1_exact, metric.f1_partial, metric.pair_counts) {
        (Some(e), Some(p), _) => diagnostics.push(format!("r_metric={:.6} (F1_exact={e:.6}, F1_partial={p:.6})", metric.value)),
        (_, _, Some(c)) => diagnostics.push(format!(
            "r_metric={:.6} (tp={}, predicted={}, gold={})",
            metric.value, c.true_positives, c.predicted, c.gold
        )),
        _ => {}
    }
    diagnostics.extend(parsed.parse_notes.iter().map(|n| format!("parse: {n}")));

    RewardBreakdown {
        r_format: format.r_format,
        r_cover,
        r_metric: metric.value,
        r_ner,
        r_total,
        s_t: format.s_t,
        s_a: format.s_a,
        i_tag: format.i_tag,
        f1_exact: metric.f1_exact,
        f1_partial: metric.f1_partial,
        pair_counts: metric.pair_counts,
        diagnostics,
    }
}

/// Standardize rewards within a group using the population standard
/// deviation. A group whose std falls below `epsilon_std` gets all zeros.
pub fn group_advantages(rewards: &[f64], epsilon_std: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::EmptyGroup);
    }
    if !(epsilon_std > 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon_std must be > 0, got {epsilon_std}")));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std >= epsilon_std) {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Combination, EffectLabel, NormalizationPolicy};
    use crate::parser::{parse_response, ParseMode};

    fn c(drugs: &[&str], label: EffectLabel) -> Combination {
        Combination::new(drugs.iter().copied(), label).unwrap()
    }

    fn set(items: Vec<Combination>) -> CombinationSet {
        items.into_iter().collect()
    }

    fn parse(raw: &str) -> ParsedResponse {
        parse_response(raw, &NormalizationPolicy::default(), ParseMode::Standard)
    }

    const FULL_THINK: &str = "<think>\n[1] Scenario\n- a\n[2] Drugs\n- b\n[3] Reasoning\n- c\n[4] Summary\n- d\n</think>";

    #[test]
    fn default_weights_are_valid() {
        let w = RewardWeights::default();
        w.validate().unwrap();
        assert_eq!((w.alpha_format, w.alpha_cover, w.alpha_metric), (0.2, 0.1, 0.7));
        assert_eq!(w.metric_exact_weight, 2.0 / 3.0);
        assert_eq!(w.metric_partial_weight, 1.0 / 3.0);
    }

    #[test]
    fn invalid_weights_rejected() {
        let bad_sum = RewardWeights { alpha_metric: 0.6, ..Default::default() };
        assert!(matches!(bad_sum.validate(), Err(Error::InvalidWeights(_))));
        let negative = RewardWeights { alpha_format: -0.1, alpha_metric: 1.0, ..Default::default() };
        assert!(negative.validate().is_err());
        let metric = RewardWeights { metric_exact_weight: 0.5, ..Default::default() };
        assert!(metric.validate().is_err());
        let nan = RewardWeights { ner_weight: f64::NAN, ..Default::default() };
        assert!(nan.validate().is_err());
    }

    #[test]
    fn format_missing_close_answer_is_zero() {
        let f = format_reward(&parse(&format!("{FULL_THINK}<answer>[]")));
        assert_eq!(f.r_format, 0.0);
        assert!(!f.i_tag);
    }

    #[test]
    fn format_full_marks() {
        let f = format_reward(&parse(&format!("{FULL_THINK}<answer>[]</answer>")));
        assert_eq!((f.r_format, f.s_t, f.s_a), (1.0, 0.25, 0.25));
    }

    #[test]
    fn format_two_sections() {
        let f = format_reward(&parse("<think>[1] a\n- x\n[2] b\n- y</think><answer>[]</answer>"));
        assert_eq!(f.r_format, 0.875);
    }

    #[test]
    fn format_penalties() {
        let unordered = format_reward(&parse("<think>[2] b\n- y\n[1] a\n- x\n[3] c\n- z\n[4] d\n- w</think><answer>[]</answer>"));
        assert_eq!(unordered.s_t, 0.125);
        let bare = format_reward(&parse("<think>[1] a\n[2] b\n- y\n[3] c\n- z\n[4] d\n- w</think><answer>[]</answer>"));
        assert_eq!(bare.s_t, 0.125);
        let invalid_json = format_reward(&parse(&format!("{FULL_THINK}<answer>not json</answer>")));
        assert_eq!((invalid_json.s_a, invalid_json.r_format), (0.0, 0.75));
        let no_sections = format_reward(&parse("<think>free text</think><answer>[]</answer>"));
        assert_eq!(no_sections.r_format, 0.75);
    }

    #[test]
    fn coverage_examples() {
        let conv = CoverageConventions::default();
        let ab = set(vec![c(&["a", "b"], EffectLabel::Pos)]);
        let abc = set(vec![c(&["a", "b", "c"], EffectLabel::Pos)]);
        assert!((coverage_reward(&ab, &abc, &conv) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(coverage_reward(&CombinationSet::new(), &ab, &conv), -1.0);
        let two = set(vec![c(&["a", "b"], EffectLabel::Pos), c(&["c", "d"], EffectLabel::Pos)]);
        assert_eq!(coverage_reward(&two, &ab, &conv), 0.5);
        assert_eq!(coverage_reward(&CombinationSet::new(), &CombinationSet::new(), &conv), 1.0);
        assert_eq!(coverage_reward(&ab, &CombinationSet::new(), &conv), 0.0);
    }

    #[test]
    fn coverage_ignores_labels() {
        let conv = CoverageConventions::default();
        let pred = set(vec![c(&["a", "b"], EffectLabel::Other)]);
        let gold = set(vec![c(&["a", "b"], EffectLabel::Pos)]);
        assert_eq!(coverage_reward(&pred, &gold, &conv), 1.0);
    }

    #[test]
    fn metric_examples() {
        let w = RewardWeights::default();
        let gold = set(vec![c(&["a", "b"], EffectLabel::Pos)]);
        assert_eq!(metric_reward(&gold, &gold, &w, TaskMode::DrugComb), 1.0);

        let gold3 = set(vec![c(&["a", "b", "c"], EffectLabel::Pos)]);
        let preds = set(vec![c(&["a", "b", "c", "d"], EffectLabel::Pos), c(&["x", "y"], EffectLabel::Pos)]);
        // exact F1 = 0. Partial masses: 3/4 for the first pred, 0 for the
        // second, 3/4 on the gold side. P = 3/8, R = 3/4, F1 = 1/2.
        let r = metric_reward(&preds, &gold3, &w, TaskMode::DrugComb);
        assert!((r - 0.5 / 3.0).abs() < 1e-12);

        // labels must agree after collapse
        let wrong = set(vec![c(&["a", "b"], EffectLabel::Neg)]);
        assert_eq!(metric_reward(&wrong, &gold, &w, TaskMode::DrugComb), 0.0);
        let neg_gold = set(vec![c(&["a", "b"], EffectLabel::Comb)]);
        assert_eq!(metric_reward(&wrong, &neg_gold, &w, TaskMode::DrugComb), 1.0);
    }

    #[test]
    fn metric_arithmetic() {
        let w = RewardWeights::default();
        let value = w.metric_exact_weight * 0.0 + w.metric_partial_weight * 0.6;
        assert!((value - 0.2).abs() < 1e-15);
    }

    #[test]
    fn metric_ddi() {
        let w = RewardWeights::default();
        let gold = set(vec![c(&["a", "b"], EffectLabel::Mechanism), c(&["a", "c"], EffectLabel::Effect)]);
        let pred = set(vec![c(&["b", "a"], EffectLabel::Mechanism)]);
        assert!((metric_reward(&pred, &gold, &w, TaskMode::Ddi13) - 2.0 / 3.0).abs() < 1e-12);
        let triple = set(vec![c(&["a", "b", "c"], EffectLabel::Mechanism)]);
        assert_eq!(metric_reward(&triple, &gold, &w, TaskMode::Ddi13), 0.0);
    }

    #[test]
    fn combined_examples() {
        let w = RewardWeights::default();
        let gold = set(vec![c(&["cisplatin", "etoposide"], EffectLabel::Pos)]);

        let perfect = format!("{FULL_THINK}<answer>[{{\"drugs\":[\"Etoposide\",\"Cisplatin\"],\"label\":\"POS\"}}]</answer>");
        let b = combined_reward(&parse(&perfect), &gold, &w, TaskMode::DrugComb);
        assert!((b.r_total - 1.0).abs() < 1e-12);

        let garbage = combined_reward(&parse("I cannot answer"), &gold, &w, TaskMode::DrugComb);
        assert!((garbage.r_total - (-0.1)).abs() < 1e-12);
        assert_eq!(garbage.r_format, 0.0);

        let empty = combined_reward(&parse(&format!("{FULL_THINK}<answer>[]</answer>")), &gold, &w, TaskMode::DrugComb);
        assert!((empty.r_total - 0.1).abs() < 1e-12);
    }

    #[test]
    fn combined_ner_term() {
        let w = RewardWeights { ner_weight: 0.5, ..Default::default() };
        let gold = set(vec![c(&["a", "b"], EffectLabel::Pos)]);
        let raw = format!("{FULL_THINK}<answer>@ner# [\"a\", \"b\"] #ner@ @re# [{{\"drugs\":[\"a\",\"b\"],\"label\":\"POS\"}}] #re@</answer>");
        let parsed = parse_response(&raw, &NormalizationPolicy::default(), ParseMode::Extended);
        let ents: BTreeSet<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let b = combined_reward_with_entities(&parsed, &gold, Some(&ents), &w, TaskMode::DrugComb);
        // NER: P = 1, R = 0.5, F1 = 2/3; total = (1 + 0.5 * 2/3) / 1.5
        assert!((b.r_ner.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((b.r_total - (1.0 + 0.5 * 2.0 / 3.0) / 1.5).abs() < 1e-12);

        let skipped = combined_reward(&parsed, &gold, &w, TaskMode::DrugComb);
        assert_eq!(skipped.r_ner, None);
        assert!((skipped.r_total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn advantages_examples() {
        assert_eq!(group_advantages(&[1.0, 1.0, 1.0, 1.0], DEFAULT_EPSILON_STD).unwrap(), vec![0.0; 4]);
        assert_eq!(group_advantages(&[0.0, 1.0], DEFAULT_EPSILON_STD).unwrap(), vec![-1.0, 1.0]);
        let a = group_advantages(&[0.1, 0.5, 0.9], DEFAULT_EPSILON_STD).unwrap();
        for (got, want) in a.iter().zip([-1.2247, 0.0, 1.2247]) {
            assert!((got - want).abs() < 1e-4);
        }
        assert_eq!(group_advantages(&[0.3], DEFAULT_EPSILON_STD).unwrap(), vec![0.0]);
        assert!(matches!(group_advantages(&[], DEFAULT_EPSILON_STD), Err(Error::EmptyGroup)));
        assert!(group_advantages(&[0.0, 1.0], 0.0).is_err());
    }
}
