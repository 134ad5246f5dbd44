use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hypowave_cli::{load_config, run_experiment, CliError, ExperimentKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hypowave", version, about = "Sub-Riemannian wave and beam experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one bicharacteristic.
    Flow(Common),
    /// Gaussian beam residuals and energies over a list of frequencies.
    Beam(Common),
    /// One observability run with a checkpoint of the initial data.
    Wave(Common),
    /// Observability quotients along shrinking spirals.
    Sweep(Common),
    /// Flag, weights and nilpotent approximation at a point.
    Nilpotent(Common),
    /// Escape times from a horizontal strip.
    Escape(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file; missing keys take the per-experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<CliError>().is_some_and(CliError::is_config);
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (kind, args) = match cli.command {
        Command::Flow(a) => (ExperimentKind::Flow, a),
        Command::Beam(a) => (ExperimentKind::Beam, a),
        Command::Wave(a) => (ExperimentKind::Wave, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::Nilpotent(a) => (ExperimentKind::Nilpotent, a),
        Command::Escape(a) => (ExperimentKind::Escape, a),
    };
    let mut config = load_config(kind, args.config.as_deref())?;
    if let Some(out) = args.out {
        config.out = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    let report = run_experiment(&config).with_context(|| format!("{kind} experiment failed"))?;
    for c in &report.checks {
        println!("{}: {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    println!("summary: {}", config.out.join("summary.txt").display());
    Ok(report.all_pass())
}
