//! Command-line front end for the shallow-water solution catalog: list the
//! families, evaluate a configured solution on a space-time grid, run the
//! verification suites, or recover the symmetry-algebra structure table.
//!
//! Exit codes: 0 pass, 1 usage or config error, 2 verification failure,
//! 3 partial convergence, 4 total singularity.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use config::Format;

#[derive(Parser)]
#[command(name = "swwlab", version, about = "Shallow water wave solution catalog")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the solution families, or one family in detail.
    List {
        /// Family id, e.g. SS_RANK2.
        #[arg(long)]
        family: Option<String>,
    },
    /// Evaluate a configured solution on its grid and write the field.
    Eval {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output file; overrides the config, stdout when absent from both.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format, csv or plotdata; overrides the config.
        #[arg(long)]
        format: Option<String>,
    },
    /// Run the residual, rank, trace, and symmetry-contraction suites.
    Verify {
        /// Run configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Residual tolerance; overrides the config.
        #[arg(long)]
        tol: Option<f64>,
        /// Finite-difference step; overrides the config.
        #[arg(long)]
        fd_step: Option<f64>,
        /// Sample-point count; overrides the config.
        #[arg(long)]
        samples: Option<usize>,
        /// Require this Jacobian rank instead of the family default.
        #[arg(long)]
        expect_rank: Option<usize>,
    },
    /// Recover the symmetry-algebra structure table and compare it with
    /// the closed-form reference.
    Symmetry {
        /// Rotation rate Omega (> 0).
        #[arg(long)]
        omega: f64,
        /// Number of sample points for the bracket expansion.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Maximum allowed deviation from the reference table.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => commands::EXIT_PASS,
                _ => commands::EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match cli.cmd {
        Cmd::List { family } => commands::cmd_list(family.as_deref()),
        Cmd::Eval { config, out, format } => {
            let format = match format.as_deref().map(Format::from_str).transpose() {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    std::process::exit(commands::EXIT_USAGE);
                }
            };
            commands::cmd_eval(&config, out.as_deref(), format)
        }
        Cmd::Verify { config, tol, fd_step, samples, expect_rank } => {
            commands::cmd_verify(&config, tol, fd_step, samples, expect_rank)
        }
        Cmd::Symmetry { omega, samples, tol } => commands::cmd_symmetry(omega, samples, tol),
    };
    std::process::exit(code);
}
