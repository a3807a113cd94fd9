//! Command-line driver: profile solves, oracle-validated simulation and
//! convergence studies from a declarative config.
//!
//! ```text
//! fde-singular [COMMAND] [KEY=VALUE]... [--config PATH] [--out DIR]
//!              [--workers K] [--strict]
//! ```
//!
//! COMMAND is one of profile | simulate | converge | sweep (it may instead
//! come from the config file). `KEY=VALUE` pairs override individual
//! parameters, e.g. `profile n=3 m=0.2 gamma=2.75 A=1`. Exit codes:
//! 0 success, 1 diagnostic failure, 2 configuration error, 3 numerical
//! failure. `FDE_SINGULAR_LOG` controls log verbosity.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{parse_config, ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "fde-singular",
    version,
    about = "Singular self-similar profiles and radial simulation of the subcritical fast diffusion equation"
)]
struct Cli {
    /// Command (profile | simulate | converge | sweep) followed by
    /// key=value overrides.
    #[arg(value_name = "COMMAND|KEY=VALUE")]
    args: Vec<String>,

    /// Config file (line-oriented `key = value` with [section] headers).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for data files and the run manifest.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Concurrent workers for `sweep`.
    #[arg(long, value_name = "K")]
    workers: Option<usize>,

    /// Abort on the first failing diagnostic instead of completing the run.
    #[arg(long)]
    strict: bool,
}

fn build_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
                line: None,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    for arg in &cli.args {
        if arg.contains('=') {
            cfg.apply_cli_pair(arg)?;
        } else {
            cfg.apply_cli_pair(&format!("command={arg}"))?;
        }
    }
    if let Some(out) = &cli.out {
        cfg.apply_cli_pair(&format!("out={}", out.display()))?;
    }
    if let Some(workers) = cli.workers {
        cfg.apply_cli_pair(&format!("workers={workers}"))?;
    }
    if cli.strict {
        cfg.apply_cli_pair("strict=true")?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("FDE_SINGULAR_LOG")).init();
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("{err}");
            return ExitCode::from(2);
        }
    };
    match runner::run(&cfg) {
        Ok(()) => {
            log::info!("run complete: {}", cfg.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(runner::exit_code(&err) as u8)
        }
    }
}
