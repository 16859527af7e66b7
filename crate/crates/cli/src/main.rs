//! `kkm` — solve, reduce, verify, bench and plot oracle-backed instances of
//! the housing-market / Rainbow-KKM problem family.
//!
//! Exit codes: 0 success, 1 input error, 2 verification failure.

mod bench;
mod commands;
mod plot;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kkm", version, about = "competitive equilibria and Rainbow-KKM points in the black-box model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write the solution as JSON.
    Solve {
        /// Problem family the instance must belong to.
        #[arg(value_parser = ["housing", "rkkm", "kkm", "cake", "sperner"])]
        target: String,
        #[arg(long)]
        instance: PathBuf,
        /// Approximation parameter in (0, 1/4). Defaults to the composed
        /// instance's recorded target when omitted.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Cache covering queries outside the oracles.
        #[arg(long)]
        memoize: bool,
        /// Suppress the timestamp so identical runs are byte-identical.
        #[arg(long)]
        deterministic: bool,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compose an instance with a reduction chain and write the result.
    Reduce {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        instance: PathBuf,
        /// Source-side approximation parameter where the chain needs one.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a solution file against its instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Tolerance override; defaults to the solution's recorded epsilon.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep query counts against the analytic budgets; writes CSV.
    Bench {
        /// Generator family: kkm-weighted-argmax or housing-quasilinear.
        #[arg(long, value_parser = ["kkm-weighted-argmax", "housing-quasilinear"])]
        family: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Comma-separated approximation parameters, e.g. "1e-2,1e-3".
        #[arg(long)]
        epsilons: String,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a 2D-renderable instance (and optional solution) to SVG.
    Plot {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve { target, instance, epsilon, seed, workers, memoize, deterministic, out } => {
            commands::solve(&target, &instance, epsilon, seed, workers, memoize, deterministic, out.as_deref())
        }
        Command::Reduce { from, to, instance, epsilon, out } => {
            commands::reduce(&from, &to, &instance, epsilon, out.as_deref())
        }
        Command::Verify { instance, solution, epsilon, seed, out } => {
            commands::verify(&instance, &solution, epsilon, seed, out.as_deref())
        }
        Command::Bench { family, n, epsilons, reps, seed, out } => {
            bench::run(&family, n, &epsilons, reps, seed, out.as_deref())
        }
        Command::Plot { instance, solution, out } => {
            plot::run(&instance, solution.as_deref(), out.as_deref())
        }
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
