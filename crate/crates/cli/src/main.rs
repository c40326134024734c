//! `bi`: batch experiments over superpixel bilateral filtering.
//!
//! Every command validates its inputs before writing any file, writes its
//! artifacts plus a run manifest (`manifest.json`) into `--out-dir`, and is
//! bit-reproducible for fixed arguments and seed (manifest stage timings are
//! measured wall-clock and therefore vary).
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 i/o failure,
//! 4 verification failure.

mod commands;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::CliError;

#[derive(Parser)]
#[command(name = "bi", version, about = "Superpixel bilateral-inception experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a PPM image into SLIC superpixels.
    Superpixels(commands::superpixels::Args),
    /// Best-achievable segmentation scores across superpixel counts.
    QuantSweep(commands::quant_sweep::Args),
    /// Filter activations through a multi-scale kernel module.
    Filter(commands::filter::Args),
    /// Train the toy segmentation network on a dataset directory.
    Train(commands::train::Args),
    /// Evaluate a checkpoint on a dataset directory.
    Eval(commands::eval::Args),
    /// Re-run inference on agglomeratively merged superpixels.
    ClusterSweep(commands::cluster_sweep::Args),
    /// Verify analytic gradients against central finite differences.
    Gradcheck(commands::gradcheck::Args),
    /// Generate the synthetic blob dataset as PPM/PGM pairs.
    Synth(commands::synth::Args),
}

fn main() -> ExitCode {
    let threads = std::env::var("BI_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    bi_core::configure_threads(threads);

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Superpixels(args) => commands::superpixels::run(&args),
        Command::QuantSweep(args) => commands::quant_sweep::run(&args),
        Command::Filter(args) => commands::filter::run(&args),
        Command::Train(args) => commands::train::run(&args),
        Command::Eval(args) => commands::eval::run(&args),
        Command::ClusterSweep(args) => commands::cluster_sweep::run(&args),
        Command::Gradcheck(args) => commands::gradcheck::run(&args),
        Command::Synth(args) => commands::synth::run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
