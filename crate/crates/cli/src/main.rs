use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dnch_cli::config::{parse_raw, Command, ConfigError, Emit, RunConfig};
use dnch_cli::{run, CliError};

/// Numerical laboratory for the doubly nonlinear viscous Cahn–Hilliard system.
///
/// Exit codes: 0 success, 1 configuration or I/O error, 2 solver failure or
/// non-finite output, 3 failed check.
#[derive(Debug, Parser)]
#[command(name = "dnch", version)]
struct Args {
    /// Command to run; overrides `command` in the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Named preset: logwell-sign, quartic-zero, quartic-power, stationary.
    #[arg(short, long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated formats: csv, jsonl.
    #[arg(long)]
    emit: Option<Emit>,
    /// Do not echo the header and summary.
    #[arg(short, long)]
    quiet: bool,
}

fn load(args: Args) -> Result<RunConfig, CliError> {
    let (mut cfg, file_command) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::Invalid(format!("cannot read {}: {e}", path.display()))
            })?;
            parse_raw(&text)?
        }
        None => (RunConfig::default(), None),
    };
    cfg.command = args
        .command
        .or(file_command)
        .ok_or_else(|| ConfigError::Invalid("no command given".into()))?;
    if let Some(name) = args.preset {
        dnch_core::presets::info(&name).ok_or_else(|| {
            ConfigError::from(dnch_core::presets::PresetError::Unknown(name.clone()))
        })?;
        cfg.preset = Some(name);
    }
    if let Some(o) = args.output {
        cfg.output = o;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.emit {
        cfg.emit = e;
    }
    cfg.quiet |= args.quiet;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = load(args).and_then(|cfg| run(&cfg));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
