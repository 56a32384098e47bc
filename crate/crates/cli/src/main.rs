//! `jetmech` command-line front end.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "jetmech", version, about = "Higher-order Lagrangian mechanics and modified gravity potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Dotted-path override applied after the file, e.g. integrator.relTol=1e-10.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads for independent sweep points.
    #[arg(short, long, default_value_t = 1, global = true)]
    jobs: usize,
    /// Output directory, overriding output.dir.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write the symbolic residual, momenta and Hamiltonians.
    DeriveEom,
    /// Integrate the equations of motion and write the trajectory.
    Simulate,
    /// Evaluate both momentum conventions and the force ladder at the initial jet.
    Momenta,
    /// Evaluate Hamiltonians and energy ranks at the initial jet.
    Energy,
    /// Check stationarity of the action along an integrated trajectory.
    ActionCheck,
    /// Tabulate a potential against Newton over a radius sweep.
    PotentialTable,
    /// Integrate a test-particle orbit in the configured potential.
    Orbit,
    /// Run the invariant suite.
    Selftest,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg: RunConfig = config::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if cli.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(CliError::compute)?;
    pool.install(|| match cli.command {
        Command::DeriveEom => commands::derive_eom_cmd(&cfg),
        Command::Simulate => commands::simulate_cmd(&cfg),
        Command::Momenta => commands::momenta_cmd(&cfg),
        Command::Energy => commands::energy_cmd(&cfg),
        Command::ActionCheck => commands::action_check_cmd(&cfg),
        Command::PotentialTable => commands::potential_table_cmd(&cfg),
        Command::Orbit => commands::orbit_cmd(&cfg),
        Command::Selftest => commands::selftest_cmd(&cfg),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("jetmech: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
