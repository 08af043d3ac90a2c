//! Command-line frontend: solve, check, oracle and stability subcommands.
//!
//! Exit codes: 0 success, 1 input error, 2 solver did not converge,
//! 3 verification failed (certificate residuals or oracle band).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "sdot",
    version,
    about = "Semi-discrete transport with storage fees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Directory for result files
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Override the duality-gap stopping tolerance
    #[arg(long, global = true)]
    pub tol_gap: Option<f64>,

    /// Override the iteration budget
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Suppress the summary line and warnings
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the configured problem and write the solution JSON
    Solve { config: PathBuf },
    /// Re-certify a stored solution against its problem
    Check { config: PathBuf, solution: PathBuf },
    /// Run an independent oracle, optionally comparing a stored solution
    Oracle {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = OracleMode::Enumerate)]
        mode: OracleMode,
        /// Sub-atoms per source atom (enumerate mode)
        #[arg(long, default_value_t = 1)]
        splits: usize,
        /// Simplex mesh width (lambda-scan-1d mode)
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        /// Enumeration work budget
        #[arg(long, default_value_t = 10_000_000)]
        budget: u128,
        /// Solution file to compare against
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Solve under a sequence of perturbed fees and check stability
    Stability {
        config: PathBuf,
        #[arg(long, value_enum)]
        perturb: PerturbKind,
        #[arg(long)]
        steps: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum OracleMode {
    Enumerate,
    #[value(name = "lambda-scan-1d")]
    LambdaScan1d,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum PerturbKind {
    /// Add a constant to the fee
    Constant,
    /// Add a linear term on the last site
    LinearShift,
    /// Stiffen a quadratic fee
    QuadraticSigma,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
