use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use ch_theta_cli::{run, Command};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ch-theta", version, about = "Theta-functional Camassa-Holm solutions on real hyperelliptic curves")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output artifacts (`solve` defaults to the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the solution on the configured grid and write CSV plus metadata.
    Solve(Common),
    /// Print the Riemann matrix with its invariants.
    Periods(Common),
    /// Print Fay-identity residuals at random real points.
    CheckFay(Common),
    /// Print the spectral PDE residual of the configured grid.
    CheckPde(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(core) = e.chain().find_map(|c| c.downcast_ref::<ch_theta::Error>()) {
                eprintln!("cause: {core:?}");
            }
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let (command, common) = match cli.command {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Periods(c) => (Command::Periods, c),
        Cmd::CheckFay(c) => (Command::CheckFay, c),
        Cmd::CheckPde(c) => (Command::CheckPde, c),
    };
    let json = run(command, &common.config, common.out.as_deref())?;
    println!("{json}");
    Ok(())
}
