//! `ferromf`: batch driver for the mean-field checks.
//!
//! Exit status is 0 when every asserted inequality held, 1 when one failed,
//! and 2 for configuration or precondition errors.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod model;
mod output;
mod tasks;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use crate::config::{ExperimentConfig, Format, TaskKind};

#[derive(Debug, Parser)]
#[command(
    name = "ferromf",
    version,
    about = "Mean-field equations for ferromagnetic Ising systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads for sweeps and enumeration.
    #[arg(long, global = true, env = "FERROMF_THREADS", value_name = "INT")]
    threads: Option<usize>,

    /// Override a config entry, e.g. `--set model.beta=0.8`. Repeatable.
    #[arg(long = "set", global = true, value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write the model as a system document.
    Gen,
    /// Mean-field residual against the theorem bound.
    VerifyBound,
    /// Residual and bound over a parameter grid.
    Sweep,
    /// Lee-Yang zeros of the partition function.
    LeeYang,
    /// Characteristic curve of the distinguished site's field.
    Characteristic,
    /// Derivative bounds along the interpolation.
    Lemma1,
    /// Drift along the characteristic curve and the final single-site bound.
    Lemma2,
    /// Coupling derivatives expressed through field derivatives.
    Corederid,
    /// Spectral low-temperature condition.
    LowTemp,
    /// Largest magnetization under a vanishing field.
    PositiveState,
    /// Heat-bath Glauber magnetization estimates.
    Sample,
}

impl Command {
    fn task(self) -> TaskKind {
        match self {
            Command::Gen => TaskKind::Gen,
            Command::VerifyBound => TaskKind::VerifyBound,
            Command::Sweep => TaskKind::ResidualSweep,
            Command::LeeYang => TaskKind::LeeYang,
            Command::Characteristic => TaskKind::Characteristic,
            Command::Lemma1 => TaskKind::Lemma1,
            Command::Lemma2 => TaskKind::Lemma2,
            Command::Corederid => TaskKind::Corederid,
            Command::LowTemp => TaskKind::LowTemp,
            Command::PositiveState => TaskKind::PositiveState,
            Command::Sample => TaskKind::Sample,
        }
    }
}

/// Config file, then `--set`, then the dedicated flags.
fn resolve(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let text = match &cli.config {
        Some(path) => Some((
            path.display().to_string(),
            fs::read_to_string(path).map_err(|e| config::ConfigError(format!("{}: {e}", path.display())))?,
        )),
        None => None,
    };
    let mut config = config::load(text.as_ref().map(|(o, b)| (o.as_str(), b.as_str())), &cli.overrides)?;
    config.task = Some(cli.command.task());
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output.path = Some(out.clone());
    }
    if let Some(format) = cli.format {
        config.output.format = Some(format);
    }
    config::validate(&config)?;
    Ok(config)
}

fn execute(cli: &Cli) -> anyhow::Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let config = resolve(cli)?;
    let task = cli.command.task();
    let result = tasks::run(&config, task)?;
    let format = config.output.format.unwrap_or(task.default_format());
    let text = output::render(&config, task, &result, format);
    match &config.output.path {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if result.violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &result.violations {
            eprintln!("violation: {v}");
        }
        Ok(ExitCode::from(1))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
