//! Command-line front end: trajectories, boundary value solves, action
//! evaluations and verification sweeps, emitting deterministic CSV or
//! JSON-lines artifacts.
//!
//! Exit codes: 0 success / all checks passed, 1 usage error, 2 a
//! verification threshold was violated, 3 numerical or solver failure
//! (including any non-finite value headed for an output file).

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "hj-action",
    about = "Closed-form endpoint actions for even-power oscillators with a numerical verification harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Values given here override the config
/// file, which overrides built-in defaults.
#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Hierarchy index n (1 = harmonic, 2 = quartic, ...)
    #[arg(long)]
    n: Option<u32>,
    /// Particle mass m
    #[arg(long)]
    mass: Option<f64>,
    /// Spring constant of the 2n-power potential
    #[arg(long)]
    k2n: Option<f64>,
    /// Auxiliary harmonic frequency (k2 = m omega^2 is derived)
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    ta: Option<f64>,
    #[arg(long)]
    ya: Option<f64>,
    #[arg(long)]
    tb: Option<f64>,
    #[arg(long)]
    yb: Option<f64>,
    /// Requested number of interior turning points (0 = principal)
    #[arg(long)]
    branch: Option<u32>,
    /// Local tolerance of the initial value integrator
    #[arg(long = "tol-ivp")]
    tol_ivp: Option<f64>,
    /// Absolute tolerance of adaptive quadratures
    #[arg(long = "tol-quad")]
    tol_quad: Option<f64>,
    /// Base finite-difference step for the Hamilton-Jacobi residuals
    #[arg(long = "fd-step")]
    fd_step: Option<f64>,
    /// Seed for all random sampling; fixes outputs bit for bit
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (defaults to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<config::OutputFormat>,
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write uniformly sampled rows
    Trajectory {
        #[command(flatten)]
        common: CommonOpts,
        /// Initial momentum at t = ta
        #[arg(long)]
        p0: Option<f64>,
        /// Number of output rows over [ta, tb]
        #[arg(long)]
        rows: Option<usize>,
    },
    /// Solve the two-point boundary value problem and report the constants
    /// of motion of the connecting extremal
    Extremal {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate the closed-form action and its quadrature oracle on the
    /// extremal through the given endpoints
    Action {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Check the Hamilton-Jacobi identities by finite differences through
    /// the boundary value solver
    #[command(name = "verify-hj")]
    VerifyHj {
        #[command(flatten)]
        common: CommonOpts,
        /// Members to test, comma separated (default 1,2,3)
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<u32>>,
        /// Seeded configurations per member
        #[arg(long)]
        count: Option<usize>,
        /// Residual threshold for exit code 2
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Check the linearization map: coordinate round trip, chain rule and
    /// Newton residual of transported harmonic solutions
    #[command(name = "verify-map")]
    VerifyMap {
        #[command(flatten)]
        common: CommonOpts,
        /// Members to test, comma separated (default 1,2,3)
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<u32>>,
    },
    /// Batch comparison of the closed form against the Lagrangian
    /// quadrature over seeded random configurations
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Members to sweep, comma separated (default 1,2,3)
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<u32>>,
        /// Seeded configurations per member
        #[arg(long)]
        count: Option<usize>,
        /// Relative-gap threshold for exit code 2
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not usage errors
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let outcome = match cli.command {
        Command::Trajectory { common, p0, rows } => commands::trajectory(&common, p0, rows),
        Command::Extremal { common } => commands::extremal(&common),
        Command::Action { common } => commands::action(&common),
        Command::VerifyHj { common, ns, count, threshold } => {
            commands::verify_hj(&common, ns, count, threshold)
        }
        Command::VerifyMap { common, ns } => commands::verify_map(&common, ns),
        Command::Sweep { common, ns, count, threshold } => {
            commands::sweep(&common, ns, count, threshold)
        }
    };

    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("hj-action: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
