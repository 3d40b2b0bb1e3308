use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rgsde::commands::{cmd_check, cmd_expect, cmd_refine, cmd_simulate, cmd_solve};
use rgsde::config::RunConfig;

/// Scenario-based engine for scalar reflected SDEs under volatility
/// uncertainty.
#[derive(Parser)]
#[command(name = "rgsde", version, about)]
struct Cli {
    /// Path to the TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured master seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (defaults to the config's [output] dir, then ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenario paths into the cache and write a manifest
    Simulate,
    /// Solve the reflected equation on every (control, scenario) pair
    Solve,
    /// Estimate the upper expectation of the configured functional
    Expect,
    /// Run the theorem check suites
    Check,
    /// Solve on nested grid refinements and report convergence gaps
    Refine,
}

fn run(cli: &Cli) -> rgsde::error::Result<i32> {
    let config_path = cli.config.as_ref().ok_or_else(|| {
        rgsde::error::Error::Config("--config PATH is required".into())
    })?;
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = cli.seed {
        config.monte_carlo.master_seed = seed;
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Simulate => cmd_simulate(&config, &out_dir),
        Command::Solve => cmd_solve(&config, &out_dir),
        Command::Expect => cmd_expect(&config, &out_dir),
        Command::Check => cmd_check(&config, &out_dir),
        Command::Refine => cmd_refine(&config, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
