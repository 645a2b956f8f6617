use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fastcoll_cli::{cmd_bench, cmd_evolve, cmd_kernel_dump, cmd_validate, with_threads, RunConfig};

#[derive(Parser)]
#[command(name = "fastcoll", version, about = "Fast spectral solver for the homogeneous Boltzmann equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; overrides `threads` in the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the oracle checks and print a pass/fail table.
    Validate,
    /// Integrate in time, writing diagnostics and the final field.
    Evolve,
    /// Time the fast and direct evaluations.
    Bench,
    /// Write the kernel decomposition.
    KernelDump,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load(&cli)?;
    let command = cli.command;
    with_threads(cfg.threads, move || {
        let mut stdout = std::io::stdout().lock();
        match command {
            Command::Validate => cmd_validate(&cfg, &mut stdout),
            Command::Evolve => cmd_evolve(&cfg, &mut stdout),
            Command::Bench => cmd_bench(&cfg, &mut stdout),
            Command::KernelDump => cmd_kernel_dump(&cfg, &mut stdout),
        }
    })?
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
