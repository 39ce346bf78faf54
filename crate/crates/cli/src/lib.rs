//! Batch runner: line-based config files, presets, CSV and JSONL output.

pub mod config;
pub mod graphs;
pub mod output;
pub mod run;

pub use config::{parse_config, parse_raw, Command, ConfigError, RunConfig};
pub use run::{run, CliError, Outcome};
