//! HTTP scoring service and command-line front end.
//!
//! Endpoints (JSON in, JSON out; schema violations return 400 with
//! `{"error": <kind>, "message": ...}`):
//!
//! - `POST /v1/score`: one response against gold, full reward breakdown.
//! - `POST /v1/score/group`: K responses, rewards plus group advantages.
//! - `POST /v1/evaluate`: corpus metrics for predictions against gold.
//! - `GET /v1/health`, `GET /v1/config`.

pub mod api;
pub mod cli;
pub mod config;
pub mod http;

pub use config::AppConfig;
pub use http::router;
