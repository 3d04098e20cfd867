//! File formats and the command pipeline around `sewercast-core`: CSV
//! telemetry ingestion/export, text checkpoints, report serialization, the
//! flat run-config format, the search trial log, and the five commands the
//! binary exposes.

pub mod checkpoint;
pub mod commands;
pub mod csvio;
mod error;
pub mod report;
pub mod runconfig;
pub mod timefmt;
pub mod triallog;

pub use error::{CliError, Result};
