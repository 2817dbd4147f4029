//! Scoring engine for n-ary drug-combination extraction.
//!
//! The crate is split along the scoring pipeline:
//!
//! - [`model`]: labels, combinations, instances and drug-name normalization.
//! - [`parser`]: decomposition of raw model output into a think block and an
//!   answer payload.
//! - [`metrics`]: exact/partial matching, corpus F1, typed DDI micro-F1 and
//!   NER F1.
//! - [`rewards`]: format, coverage and metric rewards, their weighted sum, and
//!   group-relative advantages.
//! - [`dataset`]: corpus loaders, canonical JSON-lines I/O and statistics.
//! - [`evaluation`]: corpus-level evaluation of a prediction file against gold.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod metrics;
pub mod model;
pub mod parser;
pub mod rewards;

pub use error::{Error, Result};
pub use model::{Combination, EffectLabel, Instance, NormalizationPolicy, TaskMode};
