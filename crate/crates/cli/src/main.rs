use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use memphase_cli::config::RunConfig;
use memphase_cli::{commands, validate, THREADS_ENV};

/// Dephasing channel with memory: figure data and validation suites.
#[derive(Parser)]
#[command(name = "memphase", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase covariance and coherence decay factors for the configured drive
    Decay(Common),
    /// Code error probability against mu1 at fixed epsilon
    Fig2(Common),
    /// Code error probability against epsilon
    Fig3(Common),
    /// Run the oracle suites; exits nonzero if any fails
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (name, common) = match &cli.command {
        Command::Decay(c) => ("decay", c),
        Command::Fig2(c) => ("fig2", c),
        Command::Fig3(c) => ("fig3", c),
        Command::Validate(c) => ("validate", c),
    };
    let mut config = match RunConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    init_threads()?;
    log::info!("running {name} with config {}", config.hash());

    let text = match cli.command {
        Command::Decay(_) => commands::decay(&config)?,
        Command::Fig2(_) => commands::fig2(&config)?,
        Command::Fig3(_) => commands::fig3(&config)?,
        Command::Validate(_) => {
            let report = validate::run(&config)?;
            let text = report.render(&config);
            emit(&text, common.out.as_ref())?;
            if common.out.is_some() {
                // keep the verdict visible when the report goes to a file
                eprint!("{text}");
            }
            return Ok(if report.failures() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            });
        }
    };
    emit(&text, common.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
