//! Domain types shared by the parser, metrics, rewards and loaders.
//!
//! Drug identity is the normalized surface string. An empty combination set
//! stands for `NO_COMB`; [`EffectLabel::NoComb`] is never attached to a
//! [`Combination`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Which corpus convention an instance follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum TaskMode {
    /// n-ary drug combinations labelled POS / NEG / COMB (OTHER after collapse).
    #[default]
    #[serde(rename = "DRUGCOMB", alias = "drugcomb")]
    DrugComb,
    /// Binary drug-drug interactions with typed relations.
    #[serde(rename = "DDI13", alias = "ddi13")]
    Ddi13,
}

impl fmt::Display for TaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskMode::DrugComb => "DRUGCOMB",
            TaskMode::Ddi13 => "DDI13",
        })
    }
}

impl FromStr for TaskMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DRUGCOMB" => Ok(TaskMode::DrugComb),
            "DDI13" | "DDI" => Ok(TaskMode::Ddi13),
            other => Err(Error::InvalidConfig(format!("unknown task mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffectLabel {
    Pos,
    Neg,
    Comb,
    Other,
    NoComb,
    Mechanism,
    Effect,
    Advice,
    Int,
}

impl EffectLabel {
    pub const DRUGCOMB: [EffectLabel; 5] = [
        EffectLabel::Pos,
        EffectLabel::Neg,
        EffectLabel::Comb,
        EffectLabel::Other,
        EffectLabel::NoComb,
    ];

    pub const DDI: [EffectLabel; 5] = [
        EffectLabel::Mechanism,
        EffectLabel::Effect,
        EffectLabel::Advice,
        EffectLabel::Int,
        EffectLabel::NoComb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EffectLabel::Pos => "POS",
            EffectLabel::Neg => "NEG",
            EffectLabel::Comb => "COMB",
            EffectLabel::Other => "OTHER",
            EffectLabel::NoComb => "NO_COMB",
            EffectLabel::Mechanism => "MECHANISM",
            EffectLabel::Effect => "EFFECT",
            EffectLabel::Advice => "ADVICE",
            EffectLabel::Int => "INT",
        }
    }

    pub fn is_ddi(self) -> bool {
        matches!(
            self,
            EffectLabel::Mechanism | EffectLabel::Effect | EffectLabel::Advice | EffectLabel::Int
        )
    }

    pub fn is_valid_for(self, mode: TaskMode) -> bool {
        match mode {
            TaskMode::DrugComb => !self.is_ddi(),
            TaskMode::Ddi13 => self.is_ddi() || self == EffectLabel::NoComb,
        }
    }

    /// Evaluation view of a label: NEG and COMB fold into OTHER, everything
    /// else (including DDI types) is unchanged.
    pub fn collapsed(self) -> EffectLabel {
        match self {
            EffectLabel::Neg | EffectLabel::Comb => EffectLabel::Other,
            other => other,
        }
    }
}

/// Collapse an n-ary task label into the evaluation label space.
///
/// DDI relation types have no collapsed form and yield [`Error::InvalidLabel`].
pub fn collapse_label(label: EffectLabel) -> Result<EffectLabel> {
    if label.is_ddi() {
        return Err(Error::InvalidLabel(label.as_str().to_string()));
    }
    Ok(label.collapsed())
}

impl fmt::Display for EffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EffectLabel {
    type Err = Error;

    /// Case-insensitive; `-` and spaces are treated as `_`. Accepts the
    /// dataset spellings (`POS_COMB`, `NEG_COMB`, `DDI-mechanism`, `Mec`, ...).
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .map(|c| match c {
                '-' | ' ' => '_',
                c => c.to_ascii_uppercase(),
            })
            .collect();
        let key = key.strip_prefix("DDI_").unwrap_or(&key);
        let label = match key {
            "POS" | "POS_COMB" | "POSITIVE" => EffectLabel::Pos,
            "NEG" | "NEG_COMB" | "NEGATIVE" => EffectLabel::Neg,
            "COMB" => EffectLabel::Comb,
            "OTHER" | "OTHER_COMB" => EffectLabel::Other,
            "NO_COMB" | "NOCOMB" => EffectLabel::NoComb,
            "MECHANISM" | "MEC" => EffectLabel::Mechanism,
            "EFFECT" | "EFF" => EffectLabel::Effect,
            "ADVICE" | "ADVISE" | "ADV" => EffectLabel::Advice,
            "INT" => EffectLabel::Int,
            _ => return Err(Error::UnknownLabel(s.to_string())),
        };
        Ok(label)
    }
}

impl Serialize for EffectLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EffectLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How free-form drug mentions are canonicalized before comparison.
///
/// Steps run in a fixed order: case fold, internal whitespace collapse, then
/// trimming of surrounding whitespace and punctuation until stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationPolicy {
    pub case_fold: bool,
    pub trim_whitespace: bool,
    pub collapse_internal_whitespace: bool,
    pub strip_surrounding_punctuation: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        Self {
            case_fold: true,
            trim_whitespace: true,
            collapse_internal_whitespace: true,
            strip_surrounding_punctuation: true,
        }
    }
}

const SURROUNDING_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '(', ')', '[', ']', '"', '\''];

fn is_surrounding_punct(c: char) -> bool {
    SURROUNDING_PUNCTUATION.contains(&c)
}

pub fn normalize_drug_name(raw: &str, policy: &NormalizationPolicy) -> Result<String> {
    if raw.trim().is_empty() {
        return Err(Error::EmptyName);
    }

    let mut name = if policy.case_fold {
        raw.to_lowercase()
    } else {
        raw.to_string()
    };

    if policy.collapse_internal_whitespace {
        let mut collapsed = String::with_capacity(name.len());
        let mut in_run = false;
        for c in name.chars() {
            if c.is_whitespace() {
                if !in_run {
                    collapsed.push(' ');
                }
                in_run = true;
            } else {
                collapsed.push(c);
                in_run = false;
            }
        }
        name = collapsed;
    }

    let trimmed = match (policy.trim_whitespace, policy.strip_surrounding_punctuation) {
        (true, true) => name.trim_matches(|c: char| c.is_whitespace() || is_surrounding_punct(c)),
        (true, false) => name.trim(),
        (false, true) => name.trim_matches(is_surrounding_punct),
        (false, false) => name.as_str(),
    };

    if trimmed.is_empty() {
        return Err(Error::EmptyName);
    }
    Ok(trimmed.to_string())
}

/// A set of at least two normalized drug names with an effect label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Combination {
    drugs: BTreeSet<String>,
    label: EffectLabel,
}

impl Combination {
    /// Build from names that are already normalized.
    pub fn new<I, S>(drugs: I, label: EffectLabel) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let drugs: BTreeSet<String> = drugs.into_iter().map(Into::into).collect();
        if drugs.iter().any(|d| d.is_empty()) {
            return Err(Error::EmptyName);
        }
        Self::from_set(drugs, label)
    }

    /// Normalize each raw name with `policy`, then build.
    pub fn from_raw<I, S>(raw: I, label: EffectLabel, policy: &NormalizationPolicy) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let drugs = raw
            .into_iter()
            .map(|r| normalize_drug_name(r.as_ref(), policy))
            .collect::<Result<BTreeSet<_>>>()?;
        Self::from_set(drugs, label)
    }

    fn from_set(drugs: BTreeSet<String>, label: EffectLabel) -> Result<Self> {
        if label == EffectLabel::NoComb {
            return Err(Error::NoCombWithDrugs);
        }
        if drugs.len() < 2 {
            return Err(Error::ArityViolation(format!(
                "a combination needs at least 2 distinct drugs, got {}",
                drugs.len()
            )));
        }
        Ok(Self { drugs, label })
    }

    pub fn drugs(&self) -> &BTreeSet<String> {
        &self.drugs
    }

    pub fn label(&self) -> EffectLabel {
        self.label
    }

    pub fn arity(&self) -> usize {
        self.drugs.len()
    }

    /// Re-apply a normalization policy to every drug name.
    pub fn renormalized(&self, policy: &NormalizationPolicy) -> Result<Self> {
        Self::from_raw(&self.drugs, self.label, policy)
    }

    pub fn shared_with(&self, other: &Combination) -> usize {
        self.drugs.intersection(&other.drugs).count()
    }

    pub fn union_size(&self, other: &Combination) -> usize {
        self.drugs.len() + other.drugs.len() - self.shared_with(other)
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.drugs.iter().map(String::as_str).collect();
        write!(f, "{{{}}}:{}", names.join(", "), self.label)
    }
}

/// Wire form of a combination: `{"drugs": [...], "label": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinationRecord {
    pub drugs: Vec<String>,
    pub label: String,
}

impl From<&Combination> for CombinationRecord {
    fn from(c: &Combination) -> Self {
        Self {
            drugs: c.drugs.iter().cloned().collect(),
            label: c.label.as_str().to_string(),
        }
    }
}

impl TryFrom<CombinationRecord> for Combination {
    type Error = Error;

    fn try_from(record: CombinationRecord) -> Result<Self> {
        let label: EffectLabel = record.label.parse()?;
        Combination::new(record.drugs, label)
    }
}

impl Serialize for Combination {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CombinationRecord::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Combination {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let record = CombinationRecord::deserialize(deserializer)?;
        Combination::try_from(record).map_err(serde::de::Error::custom)
    }
}

pub type CombinationSet = BTreeSet<Combination>;

/// One scoring unit. An empty `gold` set encodes `NO_COMB`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub sentence: String,
    pub context: Option<String>,
    pub mode: TaskMode,
    pub gold: CombinationSet,
    /// Drug mentions known for the sentence (given-entity classification,
    /// or gold entities for NER scoring).
    #[serde(default, rename = "entities", skip_serializing_if = "Option::is_none")]
    pub entity_hints: Option<BTreeSet<String>>,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        sentence: impl Into<String>,
        context: Option<String>,
        mode: TaskMode,
        gold: CombinationSet,
    ) -> Result<Self> {
        let instance = Self {
            id: id.into(),
            sentence: sentence.into(),
            context,
            mode,
            gold,
            entity_hints: None,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn with_entities(mut self, entities: BTreeSet<String>) -> Self {
        self.entity_hints = Some(entities);
        self
    }

    pub fn is_no_comb(&self) -> bool {
        self.gold.is_empty()
    }

    /// Check the mode-specific gold invariants.
    pub fn validate(&self) -> Result<()> {
        validate_gold(&self.gold, self.mode)
    }
}

/// Labels must belong to the mode's label family; DDI pairs are binary.
pub fn validate_gold(gold: &CombinationSet, mode: TaskMode) -> Result<()> {
    for c in gold {
        if !c.label().is_valid_for(mode) {
            return Err(Error::InvalidLabel(format!("{} in {mode} mode", c.label())));
        }
        if mode == TaskMode::Ddi13 && c.arity() != 2 {
            return Err(Error::ArityViolation(format!(
                "DDI13 pairs must have exactly 2 drugs, got {c}"
            )));
        }
    }
    Ok(())
}
