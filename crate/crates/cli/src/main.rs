//! `polysparse` command-line tool.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when oracle verification
//! keeps failing.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "polysparse", version, about = "Sparsified random-walk matrix polynomials")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Random seed; printed in the report.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Oversampling constant C_s.
    #[arg(long, global = true, default_value_t = 4.0)]
    pub oversample: f64,
    /// Cliques up to this size are materialized.
    #[arg(long, global = true, default_value_t = 32)]
    pub clique_threshold: usize,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Coordinate matrix file.
    #[arg(long)]
    pub graph: PathBuf,
    /// Diagonal of D, one value per line (overrides `D:` lines).
    #[arg(long)]
    pub diag: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sparsify the matrix polynomial induced by an MDBD.
    Sparsify {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        mdbd: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
        /// Check the output against the dense polynomial, retrying with fresh seeds.
        #[arg(long)]
        verify: bool,
        /// Round N up to the next power of two instead of failing.
        #[arg(long = "round-up-N")]
        round_up_n: bool,
    },
    /// Fit an MDBD to a canonical density.
    FitPdf {
        /// `uniform` or `exp:k`.
        #[arg(long)]
        pdf: String,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "eps-i")]
        eps_i: f64,
        #[arg(long)]
        out: PathBuf,
        /// μ used when checking the smoothness conditions.
        #[arg(long, default_value_t = 0.25)]
        mu: f64,
    },
    /// Recover mixture weights from induced coefficients.
    Recover {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the expected escaping probability of a vertex set.
    Escape {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        mdbd: PathBuf,
        #[arg(long)]
        subset: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Also compute the exact expectation by dense walks.
        #[arg(long)]
        exact: bool,
        #[arg(long = "round-up-N")]
        round_up_n: bool,
    },
    /// Solve an SDDM system with an inverse chain and Richardson iteration.
    Solve {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        b: PathBuf,
        /// Target relative residual.
        #[arg(long)]
        eps: f64,
        /// Approximation tolerance of the chain levels.
        #[arg(long, default_value_t = 0.5)]
        chain_eps: f64,
        /// Condition number bound; estimated densely when omitted.
        #[arg(long)]
        kappa: Option<f64>,
        /// Write the solution vector here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two matrices in the Loewner order.
    Verify {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        eps: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polysparse: {e}");
            ExitCode::from(e.code())
        }
    }
}
