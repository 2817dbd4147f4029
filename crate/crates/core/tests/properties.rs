use std::collections::BTreeSet;

use combscore_core::dataset::{compute_stats, export_canonical, load_canonical};
use combscore_core::metrics::{corpus_f1, instance_prf, pair_score, MatchConfig};
use combscore_core::model::CombinationSet;
use combscore_core::parser::{parse_answer_payload, parse_response, to_answer_json, to_extended_answer, ParseMode};
use combscore_core::rewards::{combined_reward, coverage_reward, format_reward, group_advantages, CoverageConventions, RewardWeights};
use combscore_core::{Combination, EffectLabel, Instance, NormalizationPolicy, TaskMode};
use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const NAMES: [&str; 8] = ["cisplatin", "etoposide", "5-fu", "paclitaxel", "carboplatin", "gemcitabine", "folinic acid", "β-carotene"];

fn label() -> impl Strategy<Value = EffectLabel> {
    prop_oneof![
        Just(EffectLabel::Pos),
        Just(EffectLabel::Neg),
        Just(EffectLabel::Comb),
        Just(EffectLabel::Other)
    ]
}

fn combination(max_names: usize) -> impl Strategy<Value = Combination> {
    (subsequence(&NAMES[..max_names], 2..=max_names.min(5)), label())
        .prop_map(|(names, l)| Combination::new(names, l).unwrap())
}

fn combo_set(max: usize) -> impl Strategy<Value = CombinationSet> {
    proptest::collection::btree_set(combination(8), 0..=max)
}

fn policy() -> NormalizationPolicy {
    NormalizationPolicy::default()
}

fn ws() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just(' '), Just('\n'), Just('\t'), Just('\r')], 0..3).prop_map(|v| v.into_iter().collect())
}

/// Answer JSON with caller-chosen whitespace at every token boundary.
fn spaced_json(set: &CombinationSet, gaps: &[String]) -> String {
    let mut gap = gaps.iter().cycle();
    let mut w = || gap.next().cloned().unwrap_or_default();
    let mut out = format!("{}[{}", w(), w());
    for (i, c) in set.iter().enumerate() {
        if i > 0 {
            out += &format!("{},{}", w(), w());
        }
        out += &format!("{{{}\"drugs\"{}:{}[{}", w(), w(), w(), w());
        for (j, d) in c.drugs().iter().enumerate() {
            if j > 0 {
                out += &format!("{},{}", w(), w());
            }
            out += &format!("{}{}", serde_json::to_string(d).unwrap(), w());
        }
        out += &format!("]{},{}\"label\"{}:{}\"{}\"{}}}", w(), w(), w(), w(), c.label(), w());
    }
    out += &format!("{}]{}", w(), w());
    out
}

const THINK: &str = "[1] Scenario\n- a\n[2] Candidates\n- b\n[3] Reasoning\n- c\n[4] Summary\n- d";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn answer_json_round_trip(set in combo_set(6)) {
        let json = to_answer_json(&set);
        let payload = parse_answer_payload(&json, &policy(), ParseMode::Standard);
        prop_assert!(payload.json_valid);
        prop_assert_eq!(&payload.combinations, &set);

        let full = format!("<think>{THINK}</think><answer>{json}</answer>");
        prop_assert_eq!(parse_response(&full, &policy(), ParseMode::Standard).combinations, Some(set));
    }

    #[test]
    fn extended_round_trip(set in combo_set(4), entities in proptest::collection::btree_set(subsequence(&NAMES[..], 1..2), 0..4)) {
        let entities: BTreeSet<String> = entities.into_iter().flatten().map(String::from).collect();
        let payload = parse_answer_payload(&to_extended_answer(&entities, &set), &policy(), ParseMode::Extended);
        prop_assert!(payload.json_valid);
        prop_assert_eq!(payload.combinations, set);
        prop_assert_eq!(payload.ner_entities, Some(entities));
    }

    #[test]
    fn whitespace_does_not_change_parse(set in combo_set(4), gaps in proptest::collection::vec(ws(), 1..16), around in proptest::collection::vec(ws(), 4)) {
        let raw = format!(
            "{}<think>{THINK}</think>{}<answer>{}{}</answer>{}",
            around[0], around[1], spaced_json(&set, &gaps), around[2], around[3]
        );
        let parsed = parse_response(&raw, &policy(), ParseMode::Standard);
        prop_assert_eq!(parsed.combinations, Some(set));
    }

    #[test]
    fn element_order_does_not_change_parse(set in combo_set(5), seed in any::<u64>()) {
        let mut records: Vec<serde_json::Value> = set
            .iter()
            .map(|c| {
                let mut drugs: Vec<&String> = c.drugs().iter().collect();
                drugs.reverse();
                serde_json::json!({"label": c.label().as_str(), "drugs": drugs})
            })
            .collect();
        records.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        let payload = parse_answer_payload(&serde_json::to_string(&records).unwrap(), &policy(), ParseMode::Standard);
        prop_assert_eq!(payload.combinations, set);
    }

    #[test]
    fn pos_scope_never_adds_mass(p in combo_set(4), g in combo_set(4)) {
        for (pos, any) in [
            (MatchConfig::pos_exact(), MatchConfig::any_exact()),
            (MatchConfig::pos_partial(), MatchConfig::any_partial()),
        ] {
            prop_assert!(instance_prf(&p, &g, &pos).tp_mass <= instance_prf(&p, &g, &any).tp_mass + 1e-15);
        }
    }

    #[test]
    fn pair_score_relations(a in combination(6), b in combination(6), sensitive in any::<bool>()) {
        let exact = MatchConfig::any_exact().label_sensitive(sensitive);
        let partial = MatchConfig::any_partial().label_sensitive(sensitive);
        if pair_score(&a, &b, &exact) == 1.0 {
            prop_assert_eq!(pair_score(&a, &b, &partial), 1.0);
        }
        if a.label().collapsed() == b.label().collapsed() {
            prop_assert_eq!(pair_score(&a, &b, &partial), pair_score(&b, &a, &partial));
        }
        let s = pair_score(&a, &b, &partial);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn corpus_order_invariance(corpus in proptest::collection::vec((combo_set(3), combo_set(3)), 1..8), seed in any::<u64>()) {
        let mut shuffled = corpus.clone();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        for cfg in [MatchConfig::pos_exact(), MatchConfig::any_partial()] {
            let a = corpus_f1(corpus.iter().map(|(p, g)| (p, g)), &cfg).unwrap();
            let b = corpus_f1(shuffled.iter().map(|(p, g)| (p, g)), &cfg).unwrap();
            prop_assert!((a.f1 - b.f1).abs() < 1e-12);
            prop_assert!((a.precision - b.precision).abs() < 1e-12);
        }

        let instances: Vec<Instance> = corpus
            .iter()
            .enumerate()
            .map(|(i, (_, g))| Instance::new(format!("i{i}"), "s", None, TaskMode::DrugComb, g.clone()).unwrap())
            .collect();
        let mut reordered = instances.clone();
        reordered.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        prop_assert_eq!(compute_stats(&instances, TaskMode::DrugComb), compute_stats(&reordered, TaskMode::DrugComb));
    }

    #[test]
    fn coverage_bounds(p in combo_set(4), g in combo_set(4)) {
        let c = coverage_reward(&p, &g, &CoverageConventions::default());
        prop_assert!((-1.0..=1.0).contains(&c));
        if !p.is_empty() {
            prop_assert!((0.0..=1.0).contains(&c));
        }
        if !p.is_empty() && !g.is_empty() && p.iter().all(|x| g.iter().any(|y| x.drugs() == y.drugs())) {
            prop_assert_eq!(c, 1.0);
        }
    }

    #[test]
    fn format_reward_range(
        sections in proptest::collection::vec((1u8..=4, any::<bool>()), 0..6),
        think in any::<bool>(),
        answer in any::<bool>(),
        json in any::<bool>(),
    ) {
        let mut body = String::new();
        for (k, bullet) in &sections {
            body += &format!("[{k}] step\n");
            if *bullet {
                body += "- note\n";
            }
        }
        let mut raw = String::new();
        if think {
            raw += &format!("<think>{body}</think>");
        }
        if answer {
            raw += if json { "<answer>[]</answer>" } else { "<answer>not json</answer>" };
        }
        let f = format_reward(&parse_response(&raw, &policy(), ParseMode::Standard));
        prop_assert!(f.r_format == 0.0 || (0.5..=1.0).contains(&f.r_format));
        prop_assert!(f.i_tag || f.r_format == 0.0);
        prop_assert!((0.0..=0.25).contains(&f.s_t) && (0.0..=0.25).contains(&f.s_a));
    }

    #[test]
    fn total_is_weighted_sum(set in combo_set(3), gold in combo_set(3)) {
        let w = RewardWeights::default();
        let raw = format!("<think>{THINK}</think><answer>{}</answer>", to_answer_json(&set));
        let b = combined_reward(&parse_response(&raw, &policy(), ParseMode::Standard), &gold, &w, TaskMode::DrugComb);
        let expected = w.alpha_format * b.r_format + w.alpha_cover * b.r_cover + w.alpha_metric * b.r_metric;
        prop_assert!((b.r_total - expected).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&b.r_metric));

        // Raising any one sub-reward with the others fixed cannot lower the total.
        for bump in 0..3 {
            let mut parts = [b.r_format, b.r_cover, b.r_metric];
            parts[bump] += 0.05;
            let raised = w.alpha_format * parts[0] + w.alpha_cover * parts[1] + w.alpha_metric * parts[2];
            prop_assert!(raised >= b.r_total);
        }
    }

    #[test]
    fn advantage_invariants(rewards in proptest::collection::vec(-2.0f64..2.0, 2..16), shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
        let a = group_advantages(&rewards, 1e-8).unwrap();
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
        if std >= 1e-6 {
            let am = a.iter().sum::<f64>() / n;
            let astd = (a.iter().map(|x| (x - am).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(am.abs() < 1e-9);
            prop_assert!((astd - 1.0).abs() < 1e-6);

            let shifted: Vec<f64> = rewards.iter().map(|r| r + shift).collect();
            let b = group_advantages(&shifted, 1e-8).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-6);
            }
            let affine: Vec<f64> = rewards.iter().map(|r| scale * r + shift).collect();
            let c = group_advantages(&affine, 1e-8).unwrap();
            for (x, y) in a.iter().zip(&c) {
                if x.abs() > 1e-6 {
                    prop_assert_eq!(x.signum(), y.signum());
                }
            }
        }
    }

    #[test]
    fn canonical_fixed_point(golds in proptest::collection::vec(combo_set(3), 0..10)) {
        let instances: Vec<Instance> = golds
            .into_iter()
            .enumerate()
            .map(|(i, g)| Instance::new(format!("doc-{i}"), format!("Sentence {i} with ümlaut."), Some("ctx".into()), TaskMode::DrugComb, g).unwrap())
            .collect();
        let f = tempfile::NamedTempFile::new().unwrap();
        export_canonical(&instances, f.path()).unwrap();
        let once = load_canonical(f.path()).unwrap();
        prop_assert_eq!(&once, &instances);
        export_canonical(&once, f.path()).unwrap();
        let bytes = std::fs::read(f.path()).unwrap();
        export_canonical(&load_canonical(f.path()).unwrap(), f.path()).unwrap();
        prop_assert_eq!(bytes, std::fs::read(f.path()).unwrap());
    }
}

#[test]
fn constant_groups_are_zero() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for _ in 0..200 {
        let k = rng.random_range(1..=16);
        let v: f64 = rng.random_range(-1.0..1.0);
        assert!(group_advantages(&vec![v; k], 1e-8).unwrap().iter().all(|a| *a == 0.0));
    }
}

fn random_text(rng: &mut impl Rng) -> String {
    const PIECES: [&str; 16] = [
        "<think>", "</think>", "<answer>", "</answer>", "@ner#", "#ner@", "@re#", "#re@", "[1]", "[4]", "- ", "{\"drugs\":[", "\"a\"", "]", "\"label\":\"POS\"}", "\n",
    ];
    if rng.random_bool(0.5) {
        let len = rng.random_range(0..256);
        let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        String::from_utf8_lossy(&bytes).into_owned()
    } else {
        (0..rng.random_range(0..24))
            .map(|_| {
                if rng.random_bool(0.7) {
                    PIECES[rng.random_range(0..PIECES.len())].to_string()
                } else {
                    char::from_u32(rng.random_range(0..0x3000)).unwrap_or('?').to_string()
                }
            })
            .collect()
    }
}

#[test]
fn fuzz_parse_and_score_never_panics() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xDCE);
    let gold: CombinationSet = [Combination::new(["a", "b"], EffectLabel::Pos).unwrap()].into();
    for _ in 0..5000 {
        let text = random_text(&mut rng);
        for mode in [ParseMode::Standard, ParseMode::Extended] {
            let parsed = parse_response(&text, &policy(), mode);
            let b = combined_reward(&parsed, &gold, &RewardWeights::default(), TaskMode::DrugComb);
            assert!(b.r_total.is_finite());
            assert!(b.r_format == 0.0 || (0.5..=1.0).contains(&b.r_format));
        }
    }
}

#[test]
fn reward_is_deterministic_across_threads() {
    let gold: CombinationSet = [Combination::new(["cisplatin", "etoposide", "5-fu"], EffectLabel::Pos).unwrap()].into();
    let raw = format!(
        "<think>{THINK}</think><answer>[{{\"drugs\":[\"Cisplatin\",\"Etoposide\"],\"label\":\"POS\"}}]</answer>"
    );
    let reference = combined_reward(&parse_response(&raw, &policy(), ParseMode::Standard), &gold, &RewardWeights::default(), TaskMode::DrugComb);
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let (raw, gold) = (raw.clone(), gold.clone());
            std::thread::spawn(move || combined_reward(&parse_response(&raw, &policy(), ParseMode::Standard), &gold, &RewardWeights::default(), TaskMode::DrugComb))
        })
        .collect();
    for h in handles {
        let b = h.join().unwrap();
        assert_eq!(b, reference);
        assert_eq!(b.r_total.to_bits(), reference.r_total.to_bits());
    }
}
