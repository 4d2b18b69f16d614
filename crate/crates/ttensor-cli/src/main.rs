//! `ttensor` — command-line front end of the t-product tensor-function
//! library.
//!
//! Subcommands: `gen` (seeded random network tensors), `texp` / `tfunc`
//! (tensor exponential / general t-functions of TNS3 files), `comm`
//! (communicability and centrality reports), `experiment` (restarted
//! block-Krylov convergence study with CSV and optional SVG output), and
//! `bench` (scheme timing and operator scaling).
//!
//! Exit codes: 0 on success, 2 on validation or usage errors, 3 when an
//! iteration stopped at its cycle budget, 4 when the restart quadrature
//! saturated.

mod experiment;
mod ops;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ttensor::bfomfom::RestartStatus;
use ttensor::Error;

/// Exit code for validation, parse, and usage errors.
const EXIT_VALIDATION: u8 = 2;
/// Exit code when an iterative run stopped at its cycle budget.
const EXIT_NON_CONVERGENCE: u8 = 3;
/// Exit code when the restart quadrature saturated.
const EXIT_SATURATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "ttensor",
    version,
    about = "Functions of third-order tensors under the t-product",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded random network tensor and write it as TNS3.
    Gen(ops::GenArgs),
    /// Apply the tensor t-exponential exp(A t) * B to TNS3 inputs.
    Texp(ops::TexpArgs),
    /// Apply a t-function f(A) * B to TNS3 inputs.
    Tfunc(ops::TfuncArgs),
    /// Report communicabilities and node centralities of a network tensor.
    Comm(ops::CommArgs),
    /// Run the restarted block-Krylov convergence experiment.
    Experiment(experiment::ExperimentArgs),
    /// Time classical against global cycles and operator application.
    Bench(experiment::BenchArgs),
}

/// What a command reports back to the exit-code mapping.
pub(crate) enum Outcome {
    /// Everything on the happy path.
    Ok,
    /// An iterative run finished with the given terminal status.
    Iteration(RestartStatus),
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.cmd {
        Cmd::Gen(a) => ops::gen(&a),
        Cmd::Texp(a) => ops::texp(&a),
        Cmd::Tfunc(a) => ops::tfunc(&a),
        Cmd::Comm(a) => ops::comm(&a),
        Cmd::Experiment(a) => experiment::run_experiment(&a),
        Cmd::Bench(a) => experiment::run_bench(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Iteration(RestartStatus::Converged)) => ExitCode::SUCCESS,
        Ok(Outcome::Iteration(RestartStatus::MaxCycles)) => {
            eprintln!("ttensor: iteration stopped at its cycle budget without converging");
            ExitCode::from(EXIT_NON_CONVERGENCE)
        }
        Ok(Outcome::Iteration(RestartStatus::QuadratureSaturated { cycle })) => {
            eprintln!("ttensor: restart quadrature saturated at cycle {cycle}");
            ExitCode::from(EXIT_SATURATION)
        }
        Err(e) => {
            eprintln!("ttensor: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
