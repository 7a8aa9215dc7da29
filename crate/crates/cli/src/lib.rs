//! Library half of the pipeline orchestrator: configuration, stage
//! runners, the run manifest, and report rollups. The binary in
//! `main.rs` is a thin clap front end over these.

pub mod config;
pub mod manifest;
pub mod rollup;
pub mod stages;

/// Exit code when validation failures are present in the processed set.
pub const EXIT_VALIDATION_FAILURES: u8 = 2;
