//! `heston-dml`: pricing, sensitivities, dataset generation, twin-network
//! training and calibration from the command line.
//!
//! Every command that writes files also writes a JSON manifest with its
//! fully resolved configuration; `heston-dml replay <manifest>` reruns it.
//! Exit status is 0 on success, 1 on a numerical or runtime failure and 2
//! on a usage error.

mod commands;
mod error;
mod files;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::calibrate::CalibrateArgs;
use commands::dataset::GenerateArgs;
use commands::market::{FitCurveArgs, SynthArgs};
use commands::price::{GreeksArgs, PriceArgs};
use commands::train::{EvaluateArgs, GridArgs, TrainArgs};
use error::CliResult;
use manifest::Run;

#[derive(Debug, Parser)]
#[command(
    name = "heston-dml",
    version,
    about = "Heston pricing, twin-network training and calibration"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, env = "HESTON_DML_THREADS")]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalised forward put and currency put price at one point.
    Price(PriceArgs),
    /// The eight input sensitivities of the normalised put.
    Greeks(GreeksArgs),
    /// Labelled training data from a Latin-hypercube design.
    Generate(GenerateArgs),
    /// Train a twin network on a generated dataset.
    Train(TrainArgs),
    /// Test-set error of a checkpoint, in basis points.
    Evaluate(EvaluateArgs),
    /// Exhaustive hyperparameter search.
    Gridsearch(GridArgs),
    /// Fit Heston parameters to put quotes.
    Calibrate(CalibrateArgs),
    /// Model put quotes in the quote-file format.
    SynthQuotes(SynthArgs),
    /// Fit a Nelson-Siegel-Svensson curve to par yields.
    FitCurve(FitCurveArgs),
    /// Rerun a recorded command from its manifest.
    Replay {
        manifest: PathBuf,
        /// Write outputs into this directory instead of the recorded paths.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn resolve(command: Command) -> CliResult<Run> {
    Ok(match command {
        Command::Price(a) => Run::Price(a.resolve(false)),
        Command::Greeks(a) => Run::Greeks(a.point.resolve(a.check_fd)),
        Command::Generate(a) => Run::Generate(a.resolve()?),
        Command::Train(a) => Run::Train(a.resolve()?),
        Command::Evaluate(a) => Run::Evaluate(a.resolve()?),
        Command::Gridsearch(a) => Run::Gridsearch(a.resolve()?),
        Command::Calibrate(a) => Run::Calibrate(a.resolve()?),
        Command::SynthQuotes(a) => Run::SynthQuotes(a.resolve()?),
        Command::FitCurve(a) => Run::FitCurve(a.resolve()),
        Command::Replay { manifest, out_dir } => {
            let mut run = manifest::read(&manifest)?.run;
            if let Some(dir) = out_dir {
                run.redirect(&dir);
            }
            run
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    match resolve(cli.command).and_then(manifest::run_and_record) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
