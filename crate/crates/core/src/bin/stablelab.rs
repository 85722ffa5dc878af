use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stablelab::config::{ExperimentConfig, ExperimentKind};
use stablelab::runner::{run_with_threads, threads_from_env, Status};

#[derive(Parser)]
#[command(
    name = "stablelab",
    version,
    about = "Config driven experiments for stable-like jump processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Experiment config (flat key = value with [section] headers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the per-check summary lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Littlewood-Paley identities on the configured grid.
    LpCheck(Common),
    /// Quadrature against multiplier, exponent fit and maximum principle probe.
    OperatorCheck(Common),
    /// Resolvent solves and Schauder ratios.
    Resolvent(Common),
    /// Path ensemble and increment moments.
    Simulate(Common),
    /// Coupled one-step predictor errors.
    Predictor(Common),
    /// Second moments of additive functionals.
    Krylov(Common),
    /// Kernel density estimate, Besov profile and oracle scaling.
    Density(Common),
    /// Fokker-Planck evolution and Monte Carlo cross check.
    Fpe(Common),
    /// Consolidate every experiment under the output directory.
    Report(Common),
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::LpCheck(c) => (ExperimentKind::LpCheck, c),
            Command::OperatorCheck(c) => (ExperimentKind::OperatorCheck, c),
            Command::Resolvent(c) => (ExperimentKind::Resolvent, c),
            Command::Simulate(c) => (ExperimentKind::Simulate, c),
            Command::Predictor(c) => (ExperimentKind::Predictor, c),
            Command::Krylov(c) => (ExperimentKind::Krylov, c),
            Command::Density(c) => (ExperimentKind::Density, c),
            Command::Fpe(c) => (ExperimentKind::Fpe, c),
            Command::Report(c) => (ExperimentKind::Report, c),
        }
    }
}

fn execute(kind: ExperimentKind, args: &Common) -> stablelab::Result<Status> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p, Some(kind))?,
        None => ExperimentConfig::defaults(kind)?,
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    let outcome = run_with_threads(&cfg, threads_from_env()?)?;
    if !args.quiet {
        for line in outcome.lines() {
            println!("{line}");
        }
        println!("artifacts: {}", outcome.dir.display());
    }
    Ok(outcome.status())
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, &args) {
        Ok(Status::Fail) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
