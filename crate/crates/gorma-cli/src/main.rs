//! Experiment harness for the gorma library.
//!
//! Exit codes: 0 = scenario ran (an infeasible optimization still counts as
//! a result), 2 = configuration error, 3 = I/O error.

mod config;
mod csv_out;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, ScenarioConfig};
use runner::Command as RunCommand;

#[derive(Parser)]
#[command(
    name = "gorma",
    version,
    about = "Delivery-probability experiments for retransmission-based transmit-only MACs"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Closed-form sweep columns only (no simulation)
    Analytic(RunArgs),
    /// Monte Carlo sweep columns only
    Simulate(RunArgs),
    /// Pick retransmission counts (one-hop or two groups)
    Optimize(RunArgs),
    /// Largest feasible first-group size per QoS target
    Capacity(RunArgs),
    /// Full sweep: analytic and simulated columns side by side
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (sectioned key=value text)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config period count
    #[arg(long)]
    periods: Option<u64>,
    /// Overrides the config output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the summary line on standard output
    #[arg(long)]
    quiet: bool,
}

enum CliError {
    Config(ConfigError),
    Io { path: PathBuf, source: std::io::Error },
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        CliError::Config(err)
    }
}

fn init_thread_pool() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var("GORMA_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().map_err(|_| {
        ConfigError::field(
            "GORMA_THREADS",
            format!("expected a thread count, got '{value}'"),
        )
    })?;
    // 0 means auto; leave the default pool alone. Without the parallel
    // feature everything is sequential and the cap is moot.
    #[cfg(feature = "parallel")]
    if threads != 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| ConfigError::field("GORMA_THREADS", e.to_string()))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn load_config(args: &RunArgs) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut cfg = config::parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(periods) = args.periods {
        if periods == 0 {
            return Err(ConfigError::field("periods", "must be >= 1").into());
        }
        cfg.periods = periods;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if cfg.out.is_none() {
        return Err(ConfigError::field(
            "run.out",
            "no output path: set 'out' in [run] or pass --out",
        )
        .into());
    }
    Ok(cfg)
}

fn execute(cmd: RunCommand, args: &RunArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let output = runner::run(cmd, &cfg)?;
    let path = cfg.out.as_ref().expect("checked in load_config");
    let text = csv_out::render(output.header, &output.rows);
    csv_out::write_file(path, &text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    if !args.quiet {
        println!("{}", output.summary);
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Err(err) = init_thread_pool() {
        eprintln!("{err}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    let (cmd, args) = match &cli.command {
        CliCommand::Analytic(args) => (RunCommand::Analytic, args),
        CliCommand::Simulate(args) => (RunCommand::Simulate, args),
        CliCommand::Optimize(args) => (RunCommand::Optimize, args),
        CliCommand::Capacity(args) => (RunCommand::Capacity, args),
        CliCommand::Sweep(args) => (RunCommand::Sweep, args),
    };
    match execute(cmd, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(err)) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
        Err(CliError::Io { path, source }) => {
            eprintln!("i/o error on {}: {source}", path.display());
            ExitCode::from(3)
        }
    }
}
