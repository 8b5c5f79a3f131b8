//! Command-line harness for risk-bounded CCMDP planning experiments.
//!
//! Subcommands: `run` executes one planner on one domain and writes result
//! records; `verify` runs the randomized verification suites; `sweep-alpha`
//! compares forward search against the exact oracle across linear risk
//! bounds; `convergence` measures the anytime planner against forward
//! search; `fig2` demonstrates the penalty-method counterexample.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration error,
//! 3 no solution under the risk bound, 4 verification failure.

mod commands;
mod config;
mod domain;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{CliError, CmdOutcome};

#[derive(Parser)]
#[command(name = "vulcan-cli", version, about)]
struct Cli {
    /// Output directory for result records. Overrides VULCAN_OUT_DIR and the
    /// config file; defaults to ./results.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Default, Clone)]
struct RunArgs {
    /// Domain: bandit, gp, or fig2.
    #[arg(long)]
    domain: Option<String>,
    /// Planner: vulcanfs, vulcan, oracle, or penalty-sweep.
    #[arg(long)]
    planner: Option<String>,
    /// Named parameter preset for the domain (bandit: table1).
    #[arg(long)]
    preset: Option<String>,
    /// Planning horizon (actions to take).
    #[arg(long)]
    horizon: Option<usize>,
    /// Discount factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// Risk bounding function: constant:D, linear:A, or sataffine:A,B,C.
    #[arg(long)]
    delta: Option<String>,
    /// History functional for the local constraint: g or f1.
    #[arg(long)]
    f: Option<String>,
    /// Sampling budget for the anytime planner: samples:N or seconds:S.
    #[arg(long)]
    budget: Option<String>,
    /// UCT exploration constant.
    #[arg(long)]
    c: Option<f64>,
    /// Base seed; replicate k uses generator stream k.
    #[arg(long)]
    seed: Option<u64>,
    /// Seeded replicates to run.
    #[arg(long)]
    replicates: Option<usize>,
    /// GP grid size, e.g. 6x6.
    #[arg(long)]
    grid: Option<String>,
    /// GP start cell, e.g. 0,0.
    #[arg(long)]
    start: Option<String>,
    /// GP obstacle rectangle xmin,ymin,xmax,ymax; repeatable.
    #[arg(long = "obstacle")]
    obstacles: Vec<String>,
    /// Penalty coefficients lo:hi:step for penalty-sweep.
    #[arg(long)]
    m: Option<String>,
    /// TOML config file; flags take precedence over its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a planner on a domain and write result records.
    Run(RunArgs),
    /// Run randomized verification suites and report pass/fail.
    Verify {
        /// One of lemmas, theorem1, counts, dominance, functional-equality;
        /// all suites when omitted.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random instances per suite.
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// Sweep the linear risk bound slope on the bandit and compare forward
    /// search against the exact optimum.
    SweepAlpha {
        #[arg(long, default_value_t = 0.0005)]
        alpha_min: f64,
        #[arg(long, default_value_t = 0.003)]
        alpha_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long, default_value_t = 4)]
        horizon: usize,
    },
    /// Measure anytime convergence toward the forward-search policy on the
    /// bandit domain.
    Convergence {
        #[arg(long, default_value_t = 5)]
        horizon: usize,
        /// Comma-separated counted sample budgets.
        #[arg(long, default_value = "20000,80000,320000,1280000,5120000")]
        budgets: String,
        #[arg(long, default_value_t = 60)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Demonstrate the penalty-method counterexample end to end.
    Fig2 {
        /// Penalty coefficients lo:hi:step.
        #[arg(long, default_value = "0:300:1")]
        m: String,
        #[arg(long, default_value = "linear:0.004")]
        delta: String,
    },
}

fn dispatch(cli: Cli) -> Result<CmdOutcome, CliError> {
    match cli.command {
        Command::Run(args) => commands::run::execute(args, cli.out),
        Command::Verify {
            suite,
            seed,
            instances,
        } => commands::verify::execute(suite, seed, instances, cli.out),
        Command::SweepAlpha {
            alpha_min,
            alpha_max,
            points,
            horizon,
        } => commands::sweep::execute(alpha_min, alpha_max, points, horizon, cli.out),
        Command::Convergence {
            horizon,
            budgets,
            replicates,
            seed,
        } => commands::convergence::execute(horizon, &budgets, replicates, seed, cli.out),
        Command::Fig2 { m, delta } => commands::counterexample::execute(&m, &delta, cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(CmdOutcome::Ok) => ExitCode::SUCCESS,
        Ok(CmdOutcome::NoSolution) => {
            eprintln!("no solution: no policy satisfies the risk bound");
            ExitCode::from(3)
        }
        Ok(CmdOutcome::VerificationFailure) => ExitCode::from(4),
        Err(CliError::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
