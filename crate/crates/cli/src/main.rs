//! `infladiff`: generate binary inflation tilings, classify their
//! diffraction, derive and solve the pair-correlation renormalisation
//! equations, and compute the diffraction numerics, with deterministic
//! artifacts and a manifest per run.

mod commands;
mod error;
mod jsonout;
mod svg;
mod weights;

use clap::{Parser, Subcommand};
use error::{CliError, CliResult};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "infladiff",
    version,
    about = "Diffraction of the binary inflation family 0 -> 0 1^m, 1 -> 0"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tiling patch around the seed and export its point set
    Generate(commands::GenerateArgs),
    /// Report the diffraction spectral type of family members
    Classify(commands::ClassifyArgs),
    /// Empirical pair correlations, renormalisation checks and the exact solve
    Paircorr(commands::PaircorrArgs),
    /// Solve the renormalisation system (same as `paircorr --solve`)
    RenormSolve(commands::PaircorrArgs),
    /// Diffraction grid, Bragg data and the distribution function
    Diffract(commands::DiffractArgs),
    /// Closed-form Bragg intensity at the origin and eta_u(0)
    Bragg(commands::BraggArgs),
}

fn init_thread_pool() -> CliResult<()> {
    if let Ok(raw) = std::env::var("INFLADIFF_THREADS") {
        let n: usize = raw
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "INFLADIFF_THREADS must be a positive integer, got {raw:?}"
                ))
            })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    init_thread_pool()?;
    match cli.command {
        Command::Generate(args) => commands::run_generate(args),
        Command::Classify(args) => commands::run_classify(args),
        Command::Paircorr(args) => commands::run_paircorr(args, false),
        Command::RenormSolve(args) => commands::run_paircorr(args, true),
        Command::Diffract(args) => commands::run_diffract(args),
        Command::Bragg(args) => commands::run_bragg(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return ExitCode::SUCCESS;
                }
                _ => {
                    eprintln!("{e}");
                    return ExitCode::from(1);
                }
            }
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
