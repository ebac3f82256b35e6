//! `fidelity`: batch runner for kicked-rotator echo experiments.
//!
//! Exit status: 0 on success, 1 when some cells or stages failed (or on a
//! runtime error), 2 when the configuration is invalid.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analysis;
mod commands;
mod config;
mod output;
mod sweep;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::{ConfigError, ExperimentConfig};
use output::{Recorder, RunManifest};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "fidelity", version, about = "Loschmidt-echo experiments on the kicked rotator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; absent fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (overrides the file).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory (overrides the file).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Report each finished task on stderr.
    #[arg(long, global = true)]
    progress: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Orbit with accumulated action, and ensemble action diffusion.
    Classical,
    /// Lyapunov exponents of the orbit through the packet centre.
    Lyapunov,
    /// Sticking time of a small disc around the packet centre.
    Stick,
    /// Quantum Loschmidt echo for each perturbation.
    Echo,
    /// Semiclassical echo for each perturbation.
    Semiclassical,
    /// Lévy fits of the action distribution and critical-η analysis.
    LevyFit,
    /// Echo plus decay-law fits for each perturbation.
    DecayFit,
    /// Decay-law fits over a (K, p_center, N, σ) grid; resumable.
    Sweep {
        /// Compute at most this many new cells in this invocation.
        #[arg(long, value_name = "CELLS")]
        limit: Option<usize>,
    },
    /// Check the configuration and print the effective file.
    ValidateConfig,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classical => "classical",
            Command::Lyapunov => "lyapunov",
            Command::Stick => "stick",
            Command::Echo => "echo",
            Command::Semiclassical => "semiclassical",
            Command::LevyFit => "levy-fit",
            Command::DecayFit => "decay-fit",
            Command::Sweep { .. } => "sweep",
            Command::ValidateConfig => "validate-config",
        }
    }
}

/// Effective configuration: file values, then flag overrides.
fn effective_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if cli.threads == Some(0) {
        return Err(ConfigError::single("--threads", "must be at least 1"));
    }
    cfg.validate()?;
    Ok(cfg)
}

enum Failure {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn run(cli: &Cli) -> Result<Option<RunManifest>, Failure> {
    let cfg = effective_config(cli)?;
    if let Command::ValidateConfig = cli.command {
        print!("{}", cfg.to_toml());
        println!("# config hash: {}", cfg.hash());
        return Ok(None);
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    let resume = match cli.command {
        Command::Sweep { .. } => Some(sweep::resume_state(&cfg)?),
        _ => None,
    };
    let name = cli.command.name();
    let mut rec = Recorder::start(&cfg.output, name, &cfg, rayon::current_num_threads(), cli.progress)?;
    match &cli.command {
        Command::Classical => commands::classical(&cfg, &mut rec)?,
        Command::Lyapunov => commands::lyapunov(&cfg, &mut rec)?,
        Command::Stick => commands::stick(&cfg, &mut rec)?,
        Command::Echo => commands::echo(&cfg, &mut rec)?,
        Command::Semiclassical => commands::semiclassical(&cfg, &mut rec)?,
        Command::LevyFit => commands::levy_fit(&cfg, &mut rec)?,
        Command::DecayFit => commands::decay_fit(&cfg, &mut rec)?,
        Command::Sweep { limit } => sweep::sweep(&cfg, &mut rec, &resume.unwrap_or_default(), *limit)?,
        Command::ValidateConfig => unreachable!("handled above"),
    }
    Ok(Some(rec.finish()?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(m)) => {
            let failed = m.failed();
            eprintln!(
                "{}: {} tasks, {failed} failed, {:.1} s; outputs in {}",
                m.command,
                m.tasks.len(),
                m.wall_seconds,
                output::MANIFEST_FILE
            );
            if failed > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Config(e)) => {
            for f in &e.0 {
                eprintln!("config error: {f}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
