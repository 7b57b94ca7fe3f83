use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gmm_bridge::{execute, Command, Overrides};

#[derive(Parser)]
#[command(name = "gmm-bridge", version, about = "Schrödinger bridges and density steering between Gaussian mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Problem configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the configured `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replaces the simulation seed.
    #[arg(long, value_name = "U64")]
    seed_override: Option<u64>,
    /// Replaces the simulated path count.
    #[arg(long, value_name = "INT")]
    paths_override: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve all pairs and the transport plan; write plan.json and marginals.csv.
    Solve(Common),
    /// Solve, roll out trajectories and write estimates.
    Simulate(Common),
    /// Compare discrete drift and diffusion with their continuous-time limits.
    LimitCheck(Common),
    /// Run a bundled example (1 or 2); --config replaces the bundled file.
    ReproduceExample {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        example: u8,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::LimitCheck(c) => (Command::LimitCheck, c),
        Cmd::ReproduceExample { example, common } => (Command::Reproduce(example), common),
    };
    let overrides = Overrides {
        seed: common.seed_override,
        paths: common.paths_override,
    };
    match execute(command, common.config.as_deref(), common.out.as_deref(), overrides) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("gmm-bridge: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
