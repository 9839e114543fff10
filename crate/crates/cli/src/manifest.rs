//! Run manifests: the fully resolved configuration of a command, written
//! next to its outputs so that `replay` can regenerate them.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::commands::calibrate::CalibrateRun;
use crate::commands::dataset::GenerateRun;
use crate::commands::market::{FitCurveRun, SynthRun};
use crate::commands::price::PriceRun;
use crate::commands::train::{EvaluateRun, GridRun, TrainRun};
use crate::error::{CliError, CliResult};
use crate::files;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum Run {
    Price(PriceRun),
    Greeks(PriceRun),
    Generate(GenerateRun),
    Train(TrainRun),
    Evaluate(EvaluateRun),
    Gridsearch(GridRun),
    Calibrate(CalibrateRun),
    SynthQuotes(SynthRun),
    FitCurve(FitCurveRun),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub platform: String,
    pub run: Run,
    pub outputs: Vec<PathBuf>,
}

impl Run {
    /// Executes the run and returns the files it wrote.
    pub fn execute(&self) -> CliResult<Vec<PathBuf>> {
        match self {
            Run::Price(r) => r.price(),
            Run::Greeks(r) => r.greeks(),
            Run::Generate(r) => r.execute(),
            Run::Train(r) => r.execute(),
            Run::Evaluate(r) => r.execute(),
            Run::Gridsearch(r) => r.execute(),
            Run::Calibrate(r) => r.execute(),
            Run::SynthQuotes(r) => r.execute(),
            Run::FitCurve(r) => r.execute(),
        }
    }

    /// Where the manifest of this run lives.
    pub fn manifest_path(&self) -> Option<PathBuf> {
        let primary = match self {
            Run::Price(r) | Run::Greeks(r) => r.csv.clone()?,
            Run::Generate(r) => r.out.clone(),
            Run::Train(r) => r.out.clone(),
            Run::Evaluate(r) => r.out.clone(),
            Run::Gridsearch(r) => r.out.clone(),
            Run::Calibrate(r) => return Some(r.out_dir.join("manifest.json")),
            Run::SynthQuotes(r) => r.out.clone(),
            Run::FitCurve(r) => r.out.clone(),
        };
        Some(files::with_suffix(&primary, ".manifest.json"))
    }

    /// Sends every output of the run into `dir`; inputs are untouched.
    pub fn redirect(&mut self, dir: &Path) {
        match self {
            Run::Price(r) | Run::Greeks(r) => {
                if let Some(p) = r.csv.as_mut() {
                    files::rebase(p, dir)
                }
            }
            Run::Generate(r) => files::rebase(&mut r.out, dir),
            Run::Train(r) => files::rebase(&mut r.out, dir),
            Run::Evaluate(r) => files::rebase(&mut r.out, dir),
            Run::Gridsearch(r) => {
                files::rebase(&mut r.out, dir);
                if let Some(p) = r.best.as_mut() {
                    files::rebase(p, dir)
                }
            }
            Run::Calibrate(r) => r.out_dir = dir.to_path_buf(),
            Run::SynthQuotes(r) => files::rebase(&mut r.out, dir),
            Run::FitCurve(r) => files::rebase(&mut r.out, dir),
        }
    }
}

/// Executes `run` and records its manifest when it produced files.
pub fn run_and_record(run: Run) -> CliResult<()> {
    let outputs = run.execute()?;
    if outputs.is_empty() {
        return Ok(());
    }
    let Some(path) = run.manifest_path() else {
        return Ok(());
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        platform: format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
        run,
        outputs,
    };
    let mut out = files::create(&path)?;
    serde_json::to_writer_pretty(&mut out, &manifest).map_err(heston_dml::Error::from)?;
    writeln!(out)?;
    log::info!("manifest written to {}", path.display());
    Ok(())
}

pub fn read(path: &Path) -> CliResult<Manifest> {
    serde_json::from_reader(files::open(path)?).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}
