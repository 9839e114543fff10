use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use clap::{Args, ValueEnum};
use heston_dml::dataset::{generate_with_progress, write_csv, write_sidecar, DatasetMeta, FellerMode, SamplingRanges};
use heston_dml::pricer::QuadratureConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::files;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FellerArg {
    /// Redraw model parameters until 2 kappa theta > sigma^2.
    Require,
    /// Keep every draw.
    Allow,
}

impl From<FellerArg> for FellerMode {
    fn from(f: FellerArg) -> Self {
        match f {
            FellerArg::Require => FellerMode::Require,
            FellerArg::Allow => FellerMode::Allow,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// TOML file with any of: n, seed, feller, out, [ranges], [quadrature].
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of samples.
    #[arg(short, long)]
    pub n: Option<usize>,
    /// TOML file of sampling ranges (`m = [-2.0, 2.0]` ...).
    #[arg(long)]
    pub ranges: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub feller: Option<FellerArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV; the metadata sidecar goes to `<out>.meta.json`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Suppress the progress line.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateRun {
    pub n: usize,
    pub seed: u64,
    pub feller: FellerMode,
    pub ranges: SamplingRanges,
    pub quadrature: QuadratureConfig,
    pub out: PathBuf,
    #[serde(skip)]
    pub quiet: bool,
}

impl Default for GenerateRun {
    fn default() -> Self {
        Self {
            n: 16384,
            seed: 0,
            feller: FellerMode::Require,
            ranges: SamplingRanges::default(),
            quadrature: QuadratureConfig::default(),
            out: PathBuf::new(),
            quiet: false,
        }
    }
}

impl GenerateArgs {
    pub fn resolve(self) -> CliResult<GenerateRun> {
        let mut run: GenerateRun = files::load_toml(self.config.as_deref())?;
        if let Some(path) = &self.ranges {
            run.ranges = files::load_toml(Some(path))?;
        }
        if let Some(n) = self.n {
            run.n = n;
        }
        if let Some(f) = self.feller {
            run.feller = f.into();
        }
        if let Some(s) = self.seed {
            run.seed = s;
        }
        if let Some(o) = self.out {
            run.out = o;
        }
        if run.out.as_os_str().is_empty() {
            return Err(crate::error::CliError::usage("missing required --out"));
        }
        run.quiet = self.quiet;
        Ok(run)
    }
}

impl GenerateRun {
    pub fn execute(&self) -> CliResult<Vec<PathBuf>> {
        let start = Instant::now();
        let step = (self.n / 200).max(1);
        let last = AtomicUsize::new(0);
        let n = self.n;
        let quiet = self.quiet;
        let progress = move |done: usize| {
            if quiet || (!done.is_multiple_of(step) && done != n) {
                return;
            }
            // Completions arrive out of order across threads; only move forward.
            if last.fetch_max(done, Ordering::Relaxed) >= done {
                return;
            }
            let elapsed = start.elapsed().as_secs_f64();
            let eta = elapsed * (n - done) as f64 / done as f64;
            eprint!(
                "\r{done}/{n} samples ({:.1}%), elapsed {elapsed:.0}s, eta {eta:.0}s   ",
                100.0 * done as f64 / n as f64
            );
            if done == n {
                eprintln!();
            }
        };
        let samples = generate_with_progress(
            self.n,
            &self.ranges,
            self.feller,
            &self.quadrature,
            self.seed,
            &progress,
        )?;

        let mut out = files::create(&self.out)?;
        write_csv(&mut out, &samples)?;
        out.flush()?;
        let meta_path = files::with_suffix(&self.out, ".meta.json");
        let mut meta = files::create(&meta_path)?;
        write_sidecar(
            &mut meta,
            &DatasetMeta {
                n: self.n,
                seed: self.seed,
                feller_mode: self.feller,
                ranges: self.ranges,
                quadrature: self.quadrature,
                normalisation: None,
            },
        )?;
        meta.flush()?;
        log::info!(
            "wrote {} samples to {} in {:.1}s",
            samples.len(),
            self.out.display(),
            start.elapsed().as_secs_f64()
        );
        Ok(vec![self.out.clone(), meta_path])
    }
}
