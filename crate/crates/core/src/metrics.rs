//! Exact and partial matching between predicted and gold combination sets.
//!
//! Partial credit is the Jaccard overlap of the two drug sets, gated on at
//! least `partial_min_shared` common drugs and on label agreement. Each side
//! is scored against its best counterpart (no one-to-one assignment), so the
//! precision-side and recall-side masses are tracked separately.
//!
//! Empty-set conventions: an instance with neither predictions nor gold scores
//! P = R = F1 = 1 and adds nothing to corpus sums; an undefined ratio on a
//! non-empty instance is 0.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Combination, CombinationSet, EffectLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scope {
    PosOnly,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchKind {
    Exact,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub scope: Scope,
    pub match_kind: MatchKind,
    pub partial_min_shared: usize,
    /// Compare collapsed labels; when false, labels are ignored entirely.
    pub label_sensitive: bool,
}

impl MatchConfig {
    pub fn new(scope: Scope, match_kind: MatchKind) -> Self {
        Self {
            scope,
            match_kind,
            partial_min_shared: 2,
            label_sensitive: false,
        }
    }

    pub fn pos_exact() -> Self {
        Self::new(Scope::PosOnly, MatchKind::Exact)
    }

    pub fn pos_partial() -> Self {
        Self::new(Scope::PosOnly, MatchKind::Partial)
    }

    pub fn any_exact() -> Self {
        Self::new(Scope::Any, MatchKind::Exact)
    }

    pub fn any_partial() -> Self {
        Self::new(Scope::Any, MatchKind::Partial)
    }

    pub fn label_sensitive(mut self, yes: bool) -> Self {
        self.label_sensitive = yes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.partial_min_shared < 2 {
            return Err(Error::InvalidConfig(format!(
                "partial_min_shared must be >= 2, got {}",
                self.partial_min_shared
            )));
        }
        Ok(())
    }
}

/// Precision, recall and F1 with the masses they were computed from.
///
/// `tp_mass` is the prediction-side matched mass (numerator of precision) and
/// `recall_mass` the gold-side matched mass (numerator of recall). They only
/// differ under partial max-matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp_mass: f64,
    pub recall_mass: f64,
    pub pred_count: f64,
    pub gold_count: f64,
}

impl Prf {
    pub fn from_masses(tp_mass: f64, recall_mass: f64, pred_count: f64, gold_count: f64) -> Self {
        let precision = ratio(tp_mass, pred_count, gold_count);
        let recall = ratio(recall_mass, gold_count, pred_count);
        Self {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
            tp_mass,
            recall_mass,
            pred_count,
            gold_count,
        }
    }

    fn is_empty_empty(&self) -> bool {
        self.pred_count == 0.0 && self.gold_count == 0.0
    }
}

/// `num / den`, with 0/0 read as 1 when the other side is also empty, else 0.
fn ratio(num: f64, den: f64, other_den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if other_den == 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn labels_agree(p: &Combination, g: &Combination, cfg: &MatchConfig) -> bool {
    if cfg.scope == Scope::PosOnly && (p.label() != EffectLabel::Pos || g.label() != EffectLabel::Pos) {
        return false;
    }
    !cfg.label_sensitive || p.label().collapsed() == g.label().collapsed()
}

pub fn pair_score(p: &Combination, g: &Combination, cfg: &MatchConfig) -> f64 {
    if !labels_agree(p, g, cfg) {
        return 0.0;
    }
    match cfg.match_kind {
        MatchKind::Exact => {
            if p.drugs() == g.drugs() {
                1.0
            } else {
                0.0
            }
        }
        MatchKind::Partial => {
            let shared = p.shared_with(g);
            if shared >= cfg.partial_min_shared {
                shared as f64 / p.union_size(g) as f64
            } else {
                0.0
            }
        }
    }
}

fn in_scope<'a>(set: &'a CombinationSet, scope: Scope) -> Vec<&'a Combination> {
    set.iter()
        .filter(|c| scope == Scope::Any || c.label() == EffectLabel::Pos)
        .collect()
}

fn best_mass(side: &[&Combination], against: &[&Combination], cfg: &MatchConfig, flip: bool) -> f64 {
    side.iter()
        .map(|a| {
            against
                .iter()
                .map(|b| if flip { pair_score(b, a, cfg) } else { pair_score(a, b, cfg) })
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Per-instance P/R/F1. In `PosOnly` scope both sides are first restricted to
/// POS-labelled combinations.
pub fn instance_prf(preds: &CombinationSet, golds: &CombinationSet, cfg: &MatchConfig) -> Prf {
    let preds = in_scope(preds, cfg.scope);
    let golds = in_scope(golds, cfg.scope);
    let tp_mass = best_mass(&preds, &golds, cfg, false);
    let recall_mass = best_mass(&golds, &preds, cfg, true);
    Prf::from_masses(tp_mass, recall_mass, preds.len() as f64, golds.len() as f64)
}

/// Micro-averaged P/R/F1 over a corpus of `(predictions, gold)` pairs.
pub fn corpus_f1<'a, I>(instances: I, cfg: &MatchConfig) -> Result<Prf>
where
    I: IntoIterator<Item = (&'a CombinationSet, &'a CombinationSet)>,
{
    let mut seen = false;
    let (mut tp, mut rm, mut pc, mut gc) = (0.0, 0.0, 0.0, 0.0);
    for (preds, golds) in instances {
        seen = true;
        let prf = instance_prf(preds, golds, cfg);
        if prf.is_empty_empty() {
            continue;
        }
        tp += prf.tp_mass;
        rm += prf.recall_mass;
        pc += prf.pred_count;
        gc += prf.gold_count;
    }
    if !seen {
        return Err(Error::EmptyCorpus);
    }
    Ok(Prf::from_masses(tp, rm, pc, gc))
}

/// Typed-pair counts for one DDI instance. Predictions of any arity are
/// counted; only binary ones can match a gold pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairCounts {
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl PairCounts {
    pub fn add(&mut self, other: PairCounts) {
        self.true_positives += other.true_positives;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    pub fn prf(&self) -> Prf {
        let tp = self.true_positives as f64;
        Prf::from_masses(tp, tp, self.predicted as f64, self.gold as f64)
    }
}

/// A prediction is a true positive iff its unordered drug pair and its type
/// both match a gold pair; each gold pair is consumed at most once.
pub fn ddi_pair_counts(preds: &CombinationSet, golds: &CombinationSet) -> PairCounts {
    let mut unmatched: Vec<&Combination> = golds.iter().collect();
    let mut tp = 0;
    for p in preds {
        if let Some(pos) = unmatched.iter().position(|g| *g == p) {
            unmatched.swap_remove(pos);
            tp += 1;
        }
    }
    PairCounts {
        true_positives: tp,
        predicted: preds.len(),
        gold: golds.len(),
    }
}

fn check_binary(set: &CombinationSet) -> Result<()> {
    match set.iter().find(|c| c.arity() != 2) {
        Some(c) => Err(Error::ArityViolation(format!("DDI pairs must have exactly 2 drugs, got {c}"))),
        None => Ok(()),
    }
}

pub fn ddi_micro_f1<'a, I>(instances: I) -> Result<Prf>
where
    I: IntoIterator<Item = (&'a CombinationSet, &'a CombinationSet)>,
{
    let mut total = PairCounts::default();
    let mut seen = false;
    for (preds, golds) in instances {
        seen = true;
        check_binary(preds)?;
        check_binary(golds)?;
        total.add(ddi_pair_counts(preds, golds));
    }
    if !seen {
        return Err(Error::EmptyCorpus);
    }
    Ok(total.prf())
}

/// Set-based exact-name P/R/F1 over entity names.
pub fn ner_f1(pred_entities: &BTreeSet<String>, gold_entities: &BTreeSet<String>) -> Prf {
    let tp = pred_entities.intersection(gold_entities).count() as f64;
    Prf::from_masses(tp, tp, pred_entities.len() as f64, gold_entities.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(drugs: &[&str], label: EffectLabel) -> Combination {
        Combination::new(drugs.iter().copied(), label).unwrap()
    }

    fn set(items: Vec<Combination>) -> CombinationSet {
        items.into_iter().collect()
    }

    fn names(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    const POS: EffectLabel = EffectLabel::Pos;
    const OTHER: EffectLabel = EffectLabel::Other;

    #[test]
    fn pair_score_examples() {
        let abc = c(&["a", "b", "c"], POS);
        let ab = c(&["a", "b"], POS);
        let ac = c(&["a", "c"], POS);
        assert_eq!(pair_score(&abc, &abc, &MatchConfig::any_exact()), 1.0);
        // |{a,b} ∩ {a,b,c}| = 2, |∪| = 3
        assert!((pair_score(&ab, &abc, &MatchConfig::any_partial()) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(pair_score(&ab, &ac, &MatchConfig::any_partial()), 0.0);
        assert_eq!(pair_score(&ab, &abc, &MatchConfig::any_exact()), 0.0);
    }

    #[test]
    fn pair_score_labels() {
        let ab_pos = c(&["a", "b"], POS);
        let ab_neg = c(&["a", "b"], EffectLabel::Neg);
        let ab_comb = c(&["a", "b"], EffectLabel::Comb);
        let any = MatchConfig::any_exact();
        assert_eq!(pair_score(&ab_pos, &ab_neg, &any), 1.0);
        assert_eq!(pair_score(&ab_pos, &ab_neg, &any.label_sensitive(true)), 0.0);
        assert_eq!(pair_score(&ab_neg, &ab_comb, &any.label_sensitive(true)), 1.0);
        assert_eq!(pair_score(&ab_pos, &ab_neg, &MatchConfig::pos_exact()), 0.0);
        assert_eq!(pair_score(&ab_neg, &ab_neg, &MatchConfig::pos_exact()), 0.0);
        assert_eq!(pair_score(&ab_pos, &ab_pos, &MatchConfig::pos_exact()), 1.0);
    }

    #[test]
    fn higher_min_shared_gate() {
        let cfg = MatchConfig {
            partial_min_shared: 3,
            ..MatchConfig::any_partial()
        };
        assert_eq!(pair_score(&c(&["a", "b"], POS), &c(&["a", "b", "c"], POS), &cfg), 0.0);
        assert!(MatchConfig { partial_min_shared: 1, ..cfg }.validate().is_err());
    }

    #[test]
    fn instance_identity() {
        let s = set(vec![c(&["a", "b"], POS)]);
        let prf = instance_prf(&s, &s, &MatchConfig::any_exact());
        assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn instance_empty_empty() {
        let e = CombinationSet::new();
        let prf = instance_prf(&e, &e, &MatchConfig::any_partial());
        assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
        assert_eq!(prf.pred_count, 0.0);
    }

    #[test]
    fn instance_one_side_empty() {
        let e = CombinationSet::new();
        let s = set(vec![c(&["a", "b"], POS)]);
        for (p, g) in [(&e, &s), (&s, &e)] {
            let prf = instance_prf(p, g, &MatchConfig::any_exact());
            assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn instance_partial_example() {
        let preds = set(vec![c(&["a", "b"], POS)]);
        let golds = set(vec![c(&["a", "b", "c"], POS), c(&["d", "e"], OTHER)]);
        let prf = instance_prf(&preds, &golds, &MatchConfig::any_partial());
        assert!((prf.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((prf.recall - 1.0 / 3.0).abs() < 1e-12);
        assert!((prf.f1 - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn pos_scope_filters_counts() {
        let preds = set(vec![c(&["a", "b"], POS), c(&["c", "d"], OTHER)]);
        let golds = set(vec![c(&["a", "b"], POS)]);
        let pos = instance_prf(&preds, &golds, &MatchConfig::pos_exact());
        assert_eq!((pos.pred_count, pos.gold_count, pos.f1), (1.0, 1.0, 1.0));
        let any = instance_prf(&preds, &golds, &MatchConfig::any_exact());
        assert_eq!(any.precision, 0.5);
    }

    #[test]
    fn corpus_examples() {
        let one = set(vec![c(&["a", "b"], POS)]);
        let empty = CombinationSet::new();
        let cfg = MatchConfig::any_exact();

        let perfect = corpus_f1([(&one, &one), (&one, &one)], &cfg).unwrap();
        assert_eq!(perfect.f1, 1.0);

        // sums: tp 1, preds 1, golds 2
        let half = corpus_f1([(&one, &one), (&empty, &one)], &cfg).unwrap();
        assert_eq!(half.precision, 1.0);
        assert_eq!(half.recall, 0.5);
        assert!((half.f1 - 2.0 / 3.0).abs() < 1e-12);

        let all_empty = corpus_f1([(&empty, &empty), (&empty, &empty)], &cfg).unwrap();
        assert_eq!((all_empty.precision, all_empty.recall, all_empty.f1), (1.0, 1.0, 1.0));

        let skip = corpus_f1([(&one, &one), (&empty, &empty)], &cfg).unwrap();
        assert_eq!((skip.pred_count, skip.gold_count), (1.0, 1.0));

        assert!(matches!(corpus_f1(std::iter::empty(), &cfg), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn ddi_examples() {
        let mech = EffectLabel::Mechanism;
        let pred = set(vec![c(&["a", "b"], mech)]);
        let gold = set(vec![c(&["b", "a"], mech)]);
        let prf = ddi_micro_f1([(&pred, &gold)]).unwrap();
        assert_eq!(prf.f1, 1.0);

        let wrong_type = set(vec![c(&["a", "b"], EffectLabel::Effect)]);
        let counts = ddi_pair_counts(&wrong_type, &gold);
        assert_eq!(counts, PairCounts { true_positives: 0, predicted: 1, gold: 1 });

        let empty = CombinationSet::new();
        let golds = set(vec![
            c(&["a", "b"], mech),
            c(&["a", "c"], EffectLabel::Advice),
            c(&["b", "c"], EffectLabel::Int),
        ]);
        let prf = ddi_micro_f1([(&empty, &golds)]).unwrap();
        assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ddi_rejects_non_binary() {
        let gold = set(vec![c(&["a", "b", "c"], EffectLabel::Effect)]);
        let empty = CombinationSet::new();
        assert!(matches!(ddi_micro_f1([(&empty, &gold)]), Err(Error::ArityViolation(_))));
        assert!(matches!(ddi_micro_f1([(&gold, &empty)]), Err(Error::ArityViolation(_))));
    }

    #[test]
    fn ner_examples() {
        assert_eq!(ner_f1(&names(&["a", "b"]), &names(&["a", "b"])).f1, 1.0);
        let prf = ner_f1(&names(&["a"]), &names(&["a", "b"]));
        assert_eq!((prf.precision, prf.recall), (1.0, 0.5));
        assert!((prf.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(ner_f1(&names(&[]), &names(&[])).f1, 1.0);
    }
}
