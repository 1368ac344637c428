use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use quasidiff_cli::{load_config, run, Action};

/// Assemble, solve, and scan spectra of singular ODE boundary-value
/// problems described by a TOML configuration file.
#[derive(Parser)]
#[command(name = "quasidiff", version, about)]
struct Cli {
    /// Action to perform (synonym for the subcommand).
    #[arg(long, global = true)]
    action: Option<String>,
    /// Path to the run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the assembled first-order system as readable text.
    Assemble,
    /// Solve the boundary-value problem and export the trajectory.
    Solve,
    /// Scan a window or rectangle for eigenvalues.
    Spectrum,
    /// Run the invariant suites relevant to the configured problem.
    Verify,
}

fn main() -> ExitCode {
    match try_main() {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {:#}", err);
            ExitCode::FAILURE
        }
    }
}

fn try_main() -> Result<bool> {
    let cli = Cli::parse();
    let config_path = match &cli.config {
        Some(p) => p.clone(),
        None => bail!("--config is required"),
    };
    let config = load_config(&config_path)?;

    let action = if let Some(cmd) = &cli.command {
        match cmd {
            Command::Assemble => Action::Assemble,
            Command::Solve => Action::Solve,
            Command::Spectrum => Action::Spectrum,
            Command::Verify => Action::Verify,
        }
    } else if let Some(name) = &cli.action {
        name.parse()?
    } else if let Some(name) = &config.action {
        name.parse()?
    } else {
        bail!("no action: pass a subcommand, --action, or set `action` in the config")
    };

    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    let outcome = run(&config, action, &out_dir)?;
    print!("{}", outcome.report);
    for artifact in &outcome.artifacts {
        eprintln!("wrote {}", artifact.display());
    }
    Ok(outcome.passed)
}
