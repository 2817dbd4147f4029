//! Corpus loading, canonical JSON-lines I/O and corpus statistics.
//!
//! Upstream files are read through a [`SourceMapping`] (see
//! `config/source_fields.toml`) so field renames upstream only need a config
//! change. Gold labels are kept uncollapsed.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{normalize_drug_name, Combination, CombinationSet, EffectLabel, Instance, NormalizationPolicy, TaskMode};

pub const DEFAULT_MAPPING_TOML: &str = include_str!("../config/source_fields.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceMapping {
    pub version: u32,
    pub drugcomb: DrugCombFields,
    pub ddi13: Ddi13Fields,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugCombFields {
    pub train_file: String,
    pub test_file: String,
    pub id: Vec<String>,
    pub sentence: Vec<String>,
    pub context: Vec<String>,
    pub spans: Vec<String>,
    pub span_id: Vec<String>,
    pub span_text: Vec<String>,
    pub relations: Vec<String>,
    pub relation_class: Vec<String>,
    pub relation_spans: Vec<String>,
    /// Lower-cased source class → canonical label.
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ddi13Fields {
    pub train_file: String,
    pub test_file: String,
    pub id: Vec<String>,
    pub sentence: Vec<String>,
    pub entities: Vec<String>,
    pub entity_id: Vec<String>,
    pub entity_text: Vec<String>,
    pub pairs: Vec<String>,
    pub pair_e1: Vec<String>,
    pub pair_e2: Vec<String>,
    pub pair_entities: Vec<String>,
    pub pair_type: Vec<String>,
    pub pair_flag: Vec<String>,
    pub negative_types: Vec<String>,
    pub labels: BTreeMap<String, String>,
}

impl Default for SourceMapping {
    fn default() -> Self {
        Self::from_toml(DEFAULT_MAPPING_TOML).expect("bundled mapping is valid")
    }
}

impl SourceMapping {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("source mapping: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Loaded instances plus non-fatal observations (name collisions, dropped
/// relations).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedCorpus {
    pub instances: Vec<Instance>,
    pub warnings: Vec<String>,
}

struct LineCtx<'a> {
    path: &'a Path,
    line: usize,
}

impl LineCtx<'_> {
    fn err(&self, field: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            field: field.to_string(),
            message: message.into(),
        }
    }
}

fn lookup<'a>(obj: &'a Map<String, Value>, keys: &[String]) -> Option<&'a Value> {
    keys.iter().find_map(|k| obj.get(k)).filter(|v| !v.is_null())
}

fn field_name(keys: &[String]) -> &str {
    keys.first().map(String::as_str).unwrap_or("?")
}

fn required<'a>(obj: &'a Map<String, Value>, keys: &[String], ctx: &LineCtx) -> Result<&'a Value> {
    lookup(obj, keys).ok_or_else(|| ctx.err(field_name(keys), "missing"))
}

fn required_str<'a>(obj: &'a Map<String, Value>, keys: &[String], ctx: &LineCtx) -> Result<&'a str> {
    required(obj, keys, ctx)?
        .as_str()
        .ok_or_else(|| ctx.err(field_name(keys), "expected a string"))
}

fn required_array<'a>(obj: &'a Map<String, Value>, keys: &[String], ctx: &LineCtx) -> Result<&'a Vec<Value>> {
    required(obj, keys, ctx)?
        .as_array()
        .ok_or_else(|| ctx.err(field_name(keys), "expected an array"))
}

/// Entity references may be numbers or strings; compare them as strings.
fn id_key(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file).lines().enumerate().map(|(i, l)| (i + 1, l)))
}

fn parse_object(line: &str, ctx: &LineCtx) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(obj)) => Ok(obj),
        Ok(_) => Err(ctx.err("<record>", "expected a JSON object")),
        Err(e) => Err(ctx.err("<record>", e.to_string())),
    }
}

fn map_label(labels: &BTreeMap<String, String>, raw: &str, field: &str, ctx: &LineCtx) -> Result<EffectLabel> {
    let canonical = labels
        .get(&raw.trim().to_lowercase())
        .ok_or_else(|| ctx.err(field, format!("unmapped class {raw:?}")))?;
    canonical.parse().map_err(|e: Error| ctx.err(field, e.to_string()))
}

/// Normalize mention texts keyed by id; warn when distinct surface forms
/// collapse to one name.
fn normalize_mentions(
    mentions: &[(String, String)],
    policy: &NormalizationPolicy,
    doc_id: &str,
    field: &str,
    ctx: &LineCtx,
    warnings: &mut Vec<String>,
) -> Result<HashMap<String, String>> {
    let mut by_id = HashMap::new();
    let mut surfaces: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for (id, text) in mentions {
        let name = normalize_drug_name(text, policy).map_err(|e| ctx.err(field, format!("mention {id}: {e}")))?;
        surfaces.entry(name.clone()).or_default().insert(text.as_str());
        by_id.insert(id.clone(), name);
    }
    for (name, forms) in &surfaces {
        if forms.len() > 1 {
            warnings.push(format!(
                "{doc_id}: distinct mentions {:?} normalize to the same name {name:?}",
                forms
            ));
        }
    }
    Ok(by_id)
}

/// Load one DrugComb split (one JSON object per line).
pub fn load_drugcomb(path: &Path, mapping: &SourceMapping, policy: &NormalizationPolicy) -> Result<LoadedCorpus> {
    let f = &mapping.drugcomb;
    let mut corpus = LoadedCorpus::default();
    let mut seen = HashSet::new();

    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ctx = LineCtx { path, line: line_no };
        let obj = parse_object(&line, &ctx)?;

        let id = match lookup(&obj, &f.id) {
            Some(v) => id_key(v).ok_or_else(|| ctx.err(field_name(&f.id), "expected a string or number"))?,
            None => return Err(ctx.err(field_name(&f.id), "missing")),
        };
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: line_no,
                id,
            });
        }
        let sentence = required_str(&obj, &f.sentence, &ctx)?.to_string();
        let context = match lookup(&obj, &f.context) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(ctx.err(field_name(&f.context), "expected a string")),
            None => None,
        };

        let mut mentions = Vec::new();
        for (i, span) in required_array(&obj, &f.spans, &ctx)?.iter().enumerate() {
            let span = span
                .as_object()
                .ok_or_else(|| ctx.err(field_name(&f.spans), format!("span {i} is not an object")))?;
            let span_id = lookup(span, &f.span_id)
                .and_then(id_key)
                .ok_or_else(|| ctx.err(field_name(&f.span_id), format!("span {i} has no id")))?;
            let text = required_str(span, &f.span_text, &ctx)?;
            mentions.push((span_id, text.to_string()));
        }
        let names = normalize_mentions(&mentions, policy, &id, field_name(&f.span_text), &ctx, &mut corpus.warnings)?;

        let mut gold = CombinationSet::new();
        for (i, rel) in required_array(&obj, &f.relations, &ctx)?.iter().enumerate() {
            let rel = rel
                .as_object()
                .ok_or_else(|| ctx.err(field_name(&f.relations), format!("relation {i} is not an object")))?;
            let class = required_str(rel, &f.relation_class, &ctx)?;
            let label = map_label(&f.labels, class, field_name(&f.relation_class), &ctx)?;
            let mut drugs = BTreeSet::new();
            for r in required_array(rel, &f.relation_spans, &ctx)? {
                let key = id_key(r).ok_or_else(|| ctx.err(field_name(&f.relation_spans), "span reference must be a string or number"))?;
                let name = names
                    .get(&key)
                    .ok_or_else(|| ctx.err(field_name(&f.relation_spans), format!("relation {i} references unknown span {key}")))?;
                drugs.insert(name.clone());
            }
            match Combination::new(drugs, label) {
                Ok(c) => {
                    if !gold.insert(c) {
                        corpus.warnings.push(format!("{id}: relation {i} duplicates an earlier relation"));
                    }
                }
                Err(e) => corpus.warnings.push(format!("{id}: relation {i} dropped: {e}")),
            }
        }

        let entities: BTreeSet<String> = names.into_values().collect();
        let instance = Instance::new(id, sentence, context, TaskMode::DrugComb, gold)
            .map_err(|e| ctx.err(field_name(&f.relations), e.to_string()))?
            .with_entities(entities);
        corpus.instances.push(instance);
    }
    Ok(corpus)
}

fn is_negative(flag: Option<&Value>) -> bool {
    match flag {
        Some(Value::Bool(b)) => !b,
        Some(Value::String(s)) => s.eq_ignore_ascii_case("false"),
        _ => false,
    }
}

/// Load one DDI13 split (one sentence per line).
pub fn load_ddi13(path: &Path, mapping: &SourceMapping, policy: &NormalizationPolicy) -> Result<LoadedCorpus> {
    let f = &mapping.ddi13;
    let negatives: HashSet<String> = f.negative_types.iter().map(|t| t.to_lowercase()).collect();
    let mut corpus = LoadedCorpus::default();
    let mut seen = HashSet::new();

    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ctx = LineCtx { path, line: line_no };
        let obj = parse_object(&line, &ctx)?;

        let id = lookup(&obj, &f.id)
            .and_then(id_key)
            .ok_or_else(|| ctx.err(field_name(&f.id), "missing"))?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: line_no,
                id,
            });
        }
        let sentence = required_str(&obj, &f.sentence, &ctx)?.to_string();

        let mut mentions = Vec::new();
        if let Some(entities) = lookup(&obj, &f.entities) {
            let entities = entities
                .as_array()
                .ok_or_else(|| ctx.err(field_name(&f.entities), "expected an array"))?;
            for (i, e) in entities.iter().enumerate() {
                let e = e
                    .as_object()
                    .ok_or_else(|| ctx.err(field_name(&f.entities), format!("entity {i} is not an object")))?;
                let eid = lookup(e, &f.entity_id)
                    .and_then(id_key)
                    .ok_or_else(|| ctx.err(field_name(&f.entity_id), format!("entity {i} has no id")))?;
                mentions.push((eid, required_str(e, &f.entity_text, &ctx)?.to_string()));
            }
        }
        let names = normalize_mentions(&mentions, policy, &id, field_name(&f.entity_text), &ctx, &mut corpus.warnings)?;

        let mut gold = CombinationSet::new();
        let pairs = match lookup(&obj, &f.pairs) {
            Some(v) => v
                .as_array()
                .ok_or_else(|| ctx.err(field_name(&f.pairs), "expected an array"))?
                .as_slice(),
            None => &[],
        };
        for (i, pair) in pairs.iter().enumerate() {
            let pair = pair
                .as_object()
                .ok_or_else(|| ctx.err(field_name(&f.pairs), format!("pair {i} is not an object")))?;
            if is_negative(lookup(pair, &f.pair_flag)) {
                continue;
            }
            let raw_type = match lookup(pair, &f.pair_type) {
                Some(Value::String(s)) => s.as_str(),
                Some(_) => return Err(ctx.err(field_name(&f.pair_type), "expected a string")),
                None => continue,
            };
            if negatives.contains(&raw_type.to_lowercase()) {
                continue;
            }
            let label = map_label(&f.labels, raw_type, field_name(&f.pair_type), &ctx)?;

            let refs: Vec<&Value> = match (lookup(pair, &f.pair_e1), lookup(pair, &f.pair_e2)) {
                (Some(a), Some(b)) => vec![a, b],
                _ => match lookup(pair, &f.pair_entities) {
                    Some(Value::Array(list)) => list.iter().collect(),
                    _ => return Err(ctx.err(field_name(&f.pair_e1), format!("pair {i} has no entity references"))),
                },
            };
            if refs.len() != 2 {
                return Err(Error::ArityViolation(format!(
                    "{}:{line_no}: pair {i} lists {} entities, expected 2",
                    path.display(),
                    refs.len()
                )));
            }
            let mut drugs = BTreeSet::new();
            for r in refs {
                let key = id_key(r).ok_or_else(|| ctx.err(field_name(&f.pair_e1), "entity reference must be a string or number"))?;
                let name = names
                    .get(&key)
                    .ok_or_else(|| ctx.err(field_name(&f.pair_e1), format!("pair {i} references unknown entity {key}")))?;
                drugs.insert(name.clone());
            }
            match Combination::new(drugs, label) {
                Ok(c) => {
                    if !gold.insert(c) {
                        corpus.warnings.push(format!("{id}: pair {i} duplicates an earlier pair"));
                    }
                }
                Err(e) => corpus.warnings.push(format!("{id}: pair {i} dropped: {e}")),
            }
        }

        let entities: BTreeSet<String> = names.into_values().collect();
        let instance = Instance::new(id, sentence, None, TaskMode::Ddi13, gold)
            .map_err(|e| ctx.err(field_name(&f.pairs), e.to_string()))?
            .with_entities(entities);
        corpus.instances.push(instance);
    }
    Ok(corpus)
}

/// Write instances as canonical JSON-lines, one record per line.
pub fn export_canonical(instances: &[Instance], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_canonical(instances, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_canonical<W: Write>(instances: &[Instance], out: &mut W) -> std::io::Result<()> {
    for instance in instances {
        serde_json::to_writer(&mut *out, instance)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Read canonical JSON-lines. Names are taken verbatim (they were normalized
/// when the file was produced); mode invariants and id uniqueness are checked.
pub fn load_canonical(path: &Path) -> Result<Vec<Instance>> {
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ctx = LineCtx { path, line: line_no };
        let instance: Instance = serde_json::from_str(&line).map_err(|e| ctx.err("<record>", e.to_string()))?;
        instance.validate().map_err(|e| ctx.err("gold", e.to_string()))?;
        if !seen.insert(instance.id.clone()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line: line_no,
                id: instance.id,
            });
        }
        instances.push(instance);
    }
    Ok(instances)
}

/// Resolve the train/test files of a corpus directory using the mapping's file names.
pub fn split_paths(dir: &Path, mode: TaskMode, mapping: &SourceMapping) -> (PathBuf, PathBuf) {
    let (train, test) = match mode {
        TaskMode::DrugComb => (&mapping.drugcomb.train_file, &mapping.drugcomb.test_file),
        TaskMode::Ddi13 => (&mapping.ddi13.train_file, &mapping.ddi13.test_file),
    };
    (dir.join(train), dir.join(test))
}

pub fn load_source(path: &Path, mode: TaskMode, mapping: &SourceMapping, policy: &NormalizationPolicy) -> Result<LoadedCorpus> {
    match mode {
        TaskMode::DrugComb => load_drugcomb(path, mapping, policy),
        TaskMode::Ddi13 => load_ddi13(path, mapping, policy),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ArityCounts {
    pub binary: usize,
    pub ternary: usize,
    pub quaternary: usize,
    pub five_plus: usize,
}

impl ArityCounts {
    fn record(&mut self, arity: usize) {
        match arity {
            0..=2 => self.binary += 1,
            3 => self.ternary += 1,
            4 => self.quaternary += 1,
            _ => self.five_plus += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.binary + self.ternary + self.quaternary + self.five_plus
    }
}

/// Counts for one split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub mode: TaskMode,
    /// Documents (DrugComb) or sentences (DDI13).
    pub documents: usize,
    pub no_relation: usize,
    pub one_relation: usize,
    pub multi_relation: usize,
    /// Uncollapsed label → number of gold combinations.
    pub relation_counts: BTreeMap<String, usize>,
    pub arity_counts: ArityCounts,
}

impl SplitStats {
    pub fn relations(&self, label: EffectLabel) -> usize {
        self.relation_counts.get(label.as_str()).copied().unwrap_or(0)
    }

    pub fn total_relations(&self) -> usize {
        self.relation_counts.values().sum()
    }
}

pub fn compute_stats(instances: &[Instance], mode: TaskMode) -> SplitStats {
    let mut stats = SplitStats {
        mode,
        documents: instances.len(),
        no_relation: 0,
        one_relation: 0,
        multi_relation: 0,
        relation_counts: BTreeMap::new(),
        arity_counts: ArityCounts::default(),
    };
    let labels: &[EffectLabel] = match mode {
        TaskMode::DrugComb => &[EffectLabel::Pos, EffectLabel::Neg, EffectLabel::Comb],
        TaskMode::Ddi13 => &[EffectLabel::Advice, EffectLabel::Effect, EffectLabel::Int, EffectLabel::Mechanism],
    };
    for l in labels {
        stats.relation_counts.insert(l.as_str().to_string(), 0);
    }
    for instance in instances {
        match instance.gold.len() {
            0 => stats.no_relation += 1,
            1 => stats.one_relation += 1,
            _ => stats.multi_relation += 1,
        }
        for c in &instance.gold {
            *stats.relation_counts.entry(c.label().as_str().to_string()).or_default() += 1;
            stats.arity_counts.record(c.arity());
        }
    }
    stats
}

/// Statistics for named splits, in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub mode: TaskMode,
    pub splits: Vec<(String, SplitStats)>,
}

impl CorpusStats {
    pub fn split(&self, name: &str) -> Option<&SplitStats> {
        self.splits.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    /// Splits keyed by name, plus a `Total` entry summing every count.
    pub fn to_json(&self) -> serde_json::Value {
        let mut total = SplitStats {
            mode: self.mode,
            documents: 0,
            no_relation: 0,
            one_relation: 0,
            multi_relation: 0,
            relation_counts: BTreeMap::new(),
            arity_counts: ArityCounts::default(),
        };
        let mut splits = Map::new();
        for (name, s) in &self.splits {
            total.documents += s.documents;
            total.no_relation += s.no_relation;
            total.one_relation += s.one_relation;
            total.multi_relation += s.multi_relation;
            for (label, n) in &s.relation_counts {
                *total.relation_counts.entry(label.clone()).or_default() += n;
            }
            total.arity_counts.binary += s.arity_counts.binary;
            total.arity_counts.ternary += s.arity_counts.ternary;
            total.arity_counts.quaternary += s.arity_counts.quaternary;
            total.arity_counts.five_plus += s.arity_counts.five_plus;
            splits.insert(name.clone(), serde_json::to_value(s).expect("stats serialize"));
        }
        splits.insert("Total".into(), serde_json::to_value(&total).expect("stats serialize"));
        serde_json::json!({"mode": self.mode, "splits": splits})
    }

    /// Aligned text table with one column per split plus a total column.
    pub fn render_table(&self) -> String {
        let rows: Vec<(String, Vec<usize>)> = match self.mode {
            TaskMode::DrugComb => {
                let row = |name: &str, get: &dyn Fn(&SplitStats) -> usize| {
                    (name.to_string(), self.splits.iter().map(|(_, s)| get(s)).collect())
                };
                vec![
                    row("No relation", &|s| s.no_relation),
                    row("One relation", &|s| s.one_relation),
                    row("More than one relation", &|s| s.multi_relation),
                    row("POS_COMB", &|s| s.relations(EffectLabel::Pos)),
                    row("NEG_COMB", &|s| s.relations(EffectLabel::Neg)),
                    row("COMB", &|s| s.relations(EffectLabel::Comb)),
                    row("Binary", &|s| s.arity_counts.binary),
                    row("3-ary", &|s| s.arity_counts.ternary),
                    row("4-ary", &|s| s.arity_counts.quaternary),
                    row("5-ary or more", &|s| s.arity_counts.five_plus),
                ]
            }
            TaskMode::Ddi13 => {
                let row = |name: &str, get: &dyn Fn(&SplitStats) -> usize| {
                    (name.to_string(), self.splits.iter().map(|(_, s)| get(s)).collect())
                };
                vec![
                    row("# Sentences", &|s| s.documents),
                    row("Adv", &|s| s.relations(EffectLabel::Advice)),
                    row("Eff", &|s| s.relations(EffectLabel::Effect)),
                    row("Int", &|s| s.relations(EffectLabel::Int)),
                    row("Mec", &|s| s.relations(EffectLabel::Mechanism)),
                ]
            }
        };

        let mut headers: Vec<String> = vec!["Statistic".to_string()];
        headers.extend(self.splits.iter().map(|(n, _)| n.clone()));
        headers.push("Total".to_string());
        let label_width = rows.iter().map(|(n, _)| n.len()).chain([headers[0].len()]).max().unwrap_or(0);
        let col_width = headers[1..]
            .iter()
            .map(String::len)
            .chain(rows.iter().flat_map(|(_, v)| v.iter().map(|x| x.to_string().len())))
            .max()
            .unwrap_or(0)
            .max(5);

        let mut out = String::new();
        let _ = write!(out, "{:<label_width$}", headers[0]);
        for h in &headers[1..] {
            let _ = write!(out, "  {h:>col_width$}");
        }
        out.push('\n');
        for (name, values) in rows {
            let _ = write!(out, "{name:<label_width$}");
            for v in &values {
                let _ = write!(out, "  {v:>col_width$}");
            }
            let total: usize = values.iter().sum();
            let _ = writeln!(out, "  {total:>col_width$}");
        }
        out
    }
}

/// Load each named split from a source file and compute its statistics.
pub fn stats_for_splits(
    mode: TaskMode,
    splits: &[(&str, &Path)],
    mapping: &SourceMapping,
    policy: &NormalizationPolicy,
) -> Result<(CorpusStats, Vec<String>)> {
    let mut out = CorpusStats { mode, splits: Vec::new() };
    let mut warnings = Vec::new();
    for (name, path) in splits {
        let corpus = load_source(path, mode, mapping, policy)?;
        out.splits.push((name.to_string(), compute_stats(&corpus.instances, mode)));
        warnings.extend(corpus.warnings);
    }
    Ok((out, warnings))
}
