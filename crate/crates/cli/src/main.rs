use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lambdasim_cli::output::Status;
use lambdasim_cli::{execute, presets, RunConfig, RunError, Scenario};

/// Environment variable holding the worker count.
const WORKERS_ENV: &str = "LAMBDASIM_WORKERS";

#[derive(Parser)]
#[command(name = "lambdasim", version, about = "Three-level Λ system driven by two quantized fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file or a named preset.
    Run {
        /// TOML run configuration.
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Check the configuration and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// List presets, or print one as TOML.
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
    /// Compare the envelope propagator with the lab-frame reference.
    Validate {
        /// TOML configuration; defaults to the `validate_small` preset.
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_workers() -> Result<(), RunError> {
    let Ok(value) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize =
        value.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            RunError::Config(anyhow::anyhow!("{WORKERS_ENV} must be a positive integer, got {value:?}"))
        })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| RunError::Failed(e.into()))
}

fn load(config: Option<PathBuf>, preset: Option<String>) -> Result<(RunConfig, Option<String>), RunError> {
    match (config, preset) {
        (Some(path), _) => Ok((RunConfig::load(&path).map_err(RunError::Config)?, None)),
        (None, Some(name)) => match presets::find(&name) {
            Some(p) => Ok((p.config, Some(name))),
            None => Err(RunError::Config(anyhow::anyhow!("unknown preset {name:?}; see `lambdasim presets`"))),
        },
        (None, None) => Err(RunError::Config(anyhow::anyhow!("give a config file or --preset"))),
    }
}

fn run_config(mut cfg: RunConfig, preset: Option<String>, out: Option<PathBuf>) -> Result<(), RunError> {
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    configure_workers()?;
    let outcome = execute(&cfg, preset.as_deref())?;
    let status = match outcome.manifest.status {
        Status::Ok => "ok",
        Status::Unreliable => "UNRELIABLE",
        Status::Failed => "FAILED",
    };
    println!("{status}: wrote {} files to {}", outcome.manifest.files.len() + 1, cfg.output.dir.display());
    Ok(())
}

fn list_presets() {
    let all = presets::all();
    let width = all.iter().map(|p| p.name.len()).max().unwrap_or(0);
    println!("{:width$}  {:11}  {:5}  {:4}  summary", "name", "figure", "desk", "long");
    for p in all {
        println!(
            "{:width$}  {:11}  {:5}  {:4}  {}",
            p.name,
            p.figure,
            if p.desk_scale { "yes" } else { "no" },
            if p.long_running { "yes" } else { "no" },
            p.summary
        );
    }
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { config, preset, out, dry_run } => {
            let (cfg, preset) = load(config, preset)?;
            if dry_run {
                let checked = cfg.check().map_err(RunError::Config)?;
                for w in &checked.warnings {
                    eprintln!("warning: {w}");
                }
                println!(
                    "config ok: scenario {:?}, truncation ({}, {}), dimension {}",
                    cfg.scenario,
                    checked.truncation.k_max,
                    checked.truncation.m_max,
                    checked.truncation.dim()
                );
                return Ok(());
            }
            run_config(cfg, preset, out)
        }
        Command::Presets { show: None } => {
            list_presets();
            Ok(())
        }
        Command::Presets { show: Some(name) } => {
            let (cfg, _) = load(None, Some(name))?;
            print!("{}", cfg.to_toml().map_err(RunError::Failed)?);
            Ok(())
        }
        Command::Validate { config, out } => {
            let (mut cfg, preset) = match config {
                Some(path) => load(Some(path), None)?,
                None => load(None, Some("validate_small".into()))?,
            };
            cfg.scenario = Scenario::Validate;
            run_config(cfg, preset, out)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
