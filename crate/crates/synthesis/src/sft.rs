//! SFT dataset assembly from accepted traces.

use std::io::Write;

use combscore_core::parser::to_answer_json;
use combscore_core::Instance;
use serde::{Deserialize, Serialize};

use crate::error::SynthesisError;
use crate::orchestrator::{OutcomeStatus, SynthesisOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftSummary {
    pub total: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Percentage with two decimals, truncated (e.g. `"80.61%"`).
    pub acceptance_rate: String,
}

/// `accepted / total` as a percentage truncated to two decimals. An empty
/// run reports `"0.00%"`.
pub fn acceptance_rate(accepted: usize, total: usize) -> String {
    if total == 0 {
        return "0.00%".to_string();
    }
    let hundredths = (accepted as u128 * 10_000) / total as u128;
    format!("{}.{:02}%", hundredths / 100, hundredths % 100)
}

pub fn sft_input(instance: &Instance) -> String {
    match instance.context.as_deref().filter(|c| !c.trim().is_empty()) {
        Some(ctx) => format!("Target sentence: {}\nParagraph: {}", instance.sentence, ctx),
        None => format!("Target sentence: {}", instance.sentence),
    }
}

/// One record per accepted outcome; `outcomes[i]` must belong to `instances[i]`.
pub fn build_sft_dataset(
    outcomes: &[SynthesisOutcome],
    instances: &[Instance],
    instruction: &str,
) -> Result<(Vec<SftRecord>, SftSummary), SynthesisError> {
    if outcomes.len() != instances.len() {
        return Err(SynthesisError::InvalidInput(format!(
            "{} outcomes for {} instances",
            outcomes.len(),
            instances.len()
        )));
    }
    let mut records = Vec::new();
    for (outcome, instance) in outcomes.iter().zip(instances) {
        if outcome.instance_id != instance.id {
            return Err(SynthesisError::InvalidInput(format!(
                "outcome for {} paired with instance {}",
                outcome.instance_id, instance.id
            )));
        }
        if outcome.status != OutcomeStatus::Accepted {
            continue;
        }
        let trace = outcome.trace_text.as_deref().unwrap_or_default();
        records.push(SftRecord {
            instruction: instruction.to_string(),
            input: sft_input(instance),
            output: format!("<think>{trace}</think><answer>{}</answer>", to_answer_json(&instance.gold)),
        });
    }
    let accepted = records.len();
    Ok((
        records,
        SftSummary {
            total: outcomes.len(),
            accepted,
            rejected: outcomes.len() - accepted,
            acceptance_rate: acceptance_rate(accepted, outcomes.len()),
        },
    ))
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], out: &mut W) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
