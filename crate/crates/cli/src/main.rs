use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use photon_memory_cli::{run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "photon-memory", version, about = "Optimal photon storage and retrieval in atomic ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Flat key = value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated optical depths
    #[arg(long, global = true)]
    d: Option<String>,
    /// Detuning in units of the optical-coherence decay rate
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads for sweeps
    #[arg(long, global = true)]
    jobs: Option<String>,
    /// Iteration tolerance
    #[arg(long, global = true)]
    tol: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Optimal spin waves and their retrieval efficiencies
    OptimalSpinwave,
    /// Optimal storage controls for the reference input
    ShapeControls,
    /// Efficiency curves over a sweep of optical depths
    Curves,
    /// Direct simulation of storage or retrieval
    Simulate,
    /// Time-reversal iteration for retrieval
    Iterate,
}

fn configure(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let flags = [("d", &cli.d), ("delta", &cli.delta), ("out", &cli.out), ("jobs", &cli.jobs), ("tol", &cli.tol)];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let command = match cli.command {
        Cmd::OptimalSpinwave => Command::OptimalSpinwave,
        Cmd::ShapeControls => Command::ShapeControls,
        Cmd::Curves => Command::Curves,
        Cmd::Simulate => Command::Simulate,
        Cmd::Iterate => Command::Iterate,
    };
    match configure(&cli).and_then(|cfg| run(command, &cfg)) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(advice) = e.advice() {
                eprintln!("hint: {advice}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
