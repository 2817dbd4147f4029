//! Analyst/Reviewer synthesis of structured reasoning traces.
//!
//! An Analyst model writes a four-section trace anchored on the gold labels;
//! a Reviewer model scores it on six 0–5 criteria. Traces are accepted when
//! every score reaches the threshold, otherwise the Reviewer's comments are
//! fed back for another round, up to `max_iterations`.

pub mod backend;
pub mod config;
pub mod error;
pub mod mock;
pub mod orchestrator;
pub mod rubric;
pub mod sft;

pub use backend::{AgentRole, BackendError, ChatBackend, ChatRequest, HttpBackend};
pub use config::{AgentSettings, PromptTemplate, SynthesisConfig};
pub use error::SynthesisError;
pub use orchestrator::{run_corpus, run_synthesis, OutcomeStatus, SynthesisOutcome, TranscriptEntry, TranscriptRole};
pub use rubric::{accept, parse_review, Criterion, ReviewParseError, RubricScores};
pub use sft::{acceptance_rate, build_sft_dataset, SftRecord, SftSummary};
