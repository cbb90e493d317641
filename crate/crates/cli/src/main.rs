//! File-driven front end for the decomposition library.
//!
//! Exit codes: 0 all checks pass, 1 a mathematical verdict is negative,
//! 2 input error, 3 numerical-integrity failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use qlebesgue_cli::error::CliError;
use qlebesgue_cli::{commands, instance, report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qlebesgue", version, about = "Lebesgue decomposition of quantum expectations at matrix scale")]
struct Cli {
    /// Relative rank cutoff for spectral truncation.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,

    /// Absolute residual for equality checks.
    #[arg(long, global = true)]
    tol_eq: Option<f64>,

    /// Relative slack for positive semidefiniteness.
    #[arg(long, global = true)]
    tol_psd: Option<f64>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Text)]
    output: OutputMode,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Algebra dimensions and per-state positivity summary.
    Info { file: PathBuf },
    /// Split mu into parts absolutely continuous and singular with respect to lambda.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        lambda: String,
    },
    /// Derivative of mu in the commutant of the GNS representation of lambda.
    Derivative {
        file: PathBuf,
        #[arg(long)]
        mu: String,
        #[arg(long)]
        lambda: String,
    },
    /// Equilibrium residuals of a state under the instance dynamics.
    Kms {
        file: PathBuf,
        #[arg(long)]
        lambda: String,
        /// Override the inverse temperature from the file.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Generate a nearest-neighbour spin-chain instance file.
    Spinchain {
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        sites: usize,
        #[arg(long, default_value = "ising")]
        coupling: String,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    let load = |path: &PathBuf| -> Result<instance::LoadedInstance, CliError> {
        let file = instance::parse_file(path)?;
        let tolerance = instance::resolve_tolerance(
            file.tolerance.as_ref(),
            cli.tol_rank,
            cli.tol_eq,
            cli.tol_psd,
        )?;
        instance::build(&file, tolerance)
    };
    match &cli.command {
        Command::Info { file } => commands::cmd_info(&load(file)?),
        Command::Decompose { file, mu, lambda } => {
            commands::cmd_decompose(&load(file)?, mu, lambda)
        }
        Command::Derivative { file, mu, lambda } => {
            commands::cmd_derivative(&load(file)?, mu, lambda)
        }
        Command::Kms { file, lambda, beta } => commands::cmd_kms(&load(file)?, lambda, *beta),
        Command::Spinchain {
            out,
            sites,
            coupling,
            beta,
            seed,
        } => {
            let tolerance = instance::resolve_tolerance(None, cli.tol_rank, cli.tol_eq, cli.tol_psd)?;
            commands::cmd_spinchain(out, *sites, coupling, *beta, *seed, tolerance)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let rendered = match cli.output {
                OutputMode::Json => match report::to_canonical_string(&outcome.report) {
                    Ok(s) => s,
                    Err(e) => {
                        eprintln!("error: {}", e.message());
                        std::process::exit(e.exit_code());
                    }
                },
                OutputMode::Text => report::render_text(&outcome.report),
            };
            print!("{rendered}");
            std::process::exit(if outcome.pass { 0 } else { 1 });
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
