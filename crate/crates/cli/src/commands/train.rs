use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use heston_dml::dataset::{fit_normaliser, read_csv, split, LabeledSample, NormalisationStats, Split};
use heston_dml::twinnet::{
    evaluate_mse_bp, grid_search, read_checkpoint, train, write_checkpoint, write_history, write_leaderboard,
    NetworkCheckpoint, NetworkSpec, SearchSpace, TrainingConfig, TrainingData,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::files;

/// Train / validation / test proportions of every split.
pub const SPLIT_RATIOS: (f64, f64, f64) = (0.8, 0.1, 0.1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Values and differentials (lambda from the config, default 1).
    Dml,
    /// Values only (lambda = 0).
    Classical,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV produced by `generate`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Seed of the train/validation/test partition.
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// TOML network spec (hidden_layers, neurons, wide_deep, dropout, init).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// TOML training config (epochs, batch_size, lambda, schedule, ...).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Training seed (initialisation, shuffling, dropout).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Global gradient-norm threshold.
    #[arg(long)]
    pub grad_clip: Option<f64>,
    /// Checkpoint path; history and metrics are written beside it.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRun {
    pub data: PathBuf,
    pub split_seed: u64,
    pub spec: NetworkSpec,
    pub training: TrainingConfig,
    pub out: PathBuf,
}

impl TrainArgs {
    pub fn resolve(self) -> CliResult<TrainRun> {
        let spec: NetworkSpec = files::load_toml(self.spec.as_deref())?;
        let mut training: TrainingConfig = files::load_toml(self.config.as_deref())?;
        if self.mode == Some(Mode::Classical) {
            training.lambda = 0.0;
        }
        if let Some(s) = self.seed {
            training.seed = s;
        }
        if let Some(e) = self.epochs {
            training.epochs = e;
        }
        if self.grad_clip.is_some() {
            training.grad_clip = self.grad_clip;
        }
        Ok(TrainRun {
            data: files::require_path(&self.data.data, "--data")?,
            split_seed: self.data.split_seed.unwrap_or(0),
            spec,
            training,
            out: files::require_path(&self.out, "--out")?,
        })
    }
}

/// Reads a dataset and partitions it.
pub fn load_split(path: &Path, seed: u64) -> CliResult<Split<LabeledSample>> {
    let samples = read_csv(files::open(path)?)?;
    Ok(split(&samples, SPLIT_RATIOS, seed)?)
}

struct Prepared {
    raw: Split<LabeledSample>,
    stats: NormalisationStats,
    train: Vec<LabeledSample>,
    val: Vec<LabeledSample>,
}

fn prepare(data: &Path, split_seed: u64) -> CliResult<Prepared> {
    let raw = load_split(data, split_seed)?;
    let stats = fit_normaliser(&raw.train)?;
    Ok(Prepared {
        train: stats.apply(&raw.train),
        val: stats.apply(&raw.val),
        stats,
        raw,
    })
}

fn write_metrics(path: &Path, ckpt: &NetworkCheckpoint, splits: &[(&str, &[LabeledSample])]) -> CliResult<()> {
    let mut out = files::create(path)?;
    writeln!(out, "split,n,mse_bp")?;
    for (name, s) in splits {
        if !s.is_empty() {
            writeln!(out, "{name},{},{:.16e}", s.len(), evaluate_mse_bp(ckpt, s))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn save_checkpoint(path: &Path, ckpt: &NetworkCheckpoint) -> CliResult<()> {
    let mut out = files::create(path)?;
    write_checkpoint(&mut out, ckpt)?;
    out.flush()?;
    Ok(())
}

impl TrainRun {
    pub fn execute(&self) -> CliResult<Vec<PathBuf>> {
        let p = prepare(&self.data, self.split_seed)?;
        let outcome = train(
            TrainingData {
                train: &p.train,
                val: &p.val,
                stats: &p.stats,
            },
            &self.spec,
            &self.training,
        )?;
        let ckpt = &outcome.checkpoint;
        save_checkpoint(&self.out, ckpt)?;

        let history = files::with_suffix(&self.out, ".history.csv");
        let mut h = files::create(&history)?;
        write_history(&mut h, &outcome.history)?;
        h.flush()?;

        let metrics = files::with_suffix(&self.out, ".metrics.csv");
        write_metrics(
            &metrics,
            ckpt,
            &[("train", &p.raw.train), ("val", &p.raw.val), ("test", &p.raw.test)],
        )?;
        println!(
            "trained {} epochs (lambda {}); validation MSE {:.4} bp, test MSE {:.4} bp",
            ckpt.meta.epochs_run,
            self.training.lambda,
            evaluate_mse_bp(ckpt, &p.raw.val),
            evaluate_mse_bp(ckpt, &p.raw.test)
        );
        Ok(vec![self.out.clone(), history, metrics])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSel {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitSel,
    /// Metrics CSV (default `<checkpoint>.eval.csv`).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateRun {
    pub checkpoint: PathBuf,
    pub data: PathBuf,
    pub split_seed: u64,
    pub split: SplitSel,
    pub out: PathBuf,
}

impl EvaluateArgs {
    pub fn resolve(self) -> CliResult<EvaluateRun> {
        Ok(EvaluateRun {
            out: self
                .out
                .unwrap_or_else(|| files::with_suffix(&self.checkpoint, ".eval.csv")),
            checkpoint: self.checkpoint,
            data: files::require_path(&self.data.data, "--data")?,
            split_seed: self.data.split_seed.unwrap_or(0),
            split: self.split,
        })
    }
}

impl EvaluateRun {
    pub fn execute(&self) -> CliResult<Vec<PathBuf>> {
        let ckpt = read_checkpoint(files::open(&self.checkpoint)?)?;
        let s = load_split(&self.data, self.split_seed)?;
        let all: Vec<LabeledSample>;
        let (name, samples): (&str, &[LabeledSample]) = match self.split {
            SplitSel::Train => ("train", &s.train),
            SplitSel::Val => ("val", &s.val),
            SplitSel::Test => ("test", &s.test),
            SplitSel::All => {
                all = [s.train.as_slice(), &s.val, &s.test].concat();
                ("all", &all)
            }
        };
        if samples.is_empty() {
            return Err(CliError::usage(format!("the {name} split is empty")));
        }
        write_metrics(&self.out, &ckpt, &[(name, samples)])?;
        println!(
            "{name} MSE: {:.6} bp (n = {})",
            evaluate_mse_bp(&ckpt, samples),
            samples.len()
        );
        Ok(vec![self.out.clone()])
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// TOML search space (hidden_layers, neurons, learning_rates, grad_clips, epochs, ...).
    #[arg(long)]
    pub space: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Leaderboard CSV.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Also save the best checkpoint here.
    #[arg(long)]
    pub best: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRun {
    pub data: PathBuf,
    pub split_seed: u64,
    pub spec: NetworkSpec,
    pub training: TrainingConfig,
    pub space: SearchSpace,
    pub out: PathBuf,
    pub best: Option<PathBuf>,
}

impl GridArgs {
    pub fn resolve(self) -> CliResult<GridRun> {
        Ok(GridRun {
            data: files::require_path(&self.data.data, "--data")?,
            split_seed: self.data.split_seed.unwrap_or(0),
            spec: files::load_toml(self.spec.as_deref())?,
            training: files::load_toml(self.config.as_deref())?,
            space: files::load_toml(Some(&self.space))?,
            out: files::require_path(&self.out, "--out")?,
            best: self.best,
        })
    }
}

impl GridRun {
    pub fn execute(&self) -> CliResult<Vec<PathBuf>> {
        let p = prepare(&self.data, self.split_seed)?;
        let result = grid_search(
            TrainingData {
                train: &p.train,
                val: &p.val,
                stats: &p.stats,
            },
            &self.spec,
            &self.training,
            &self.space,
        )?;
        let mut out = files::create(&self.out)?;
        write_leaderboard(&mut out, &result.leaderboard)?;
        out.flush()?;
        let top = &result.leaderboard[0];
        println!(
            "{} runs; best {}x{} lr {:e} clip {:?} epochs {}: validation loss {:.6e}",
            result.leaderboard.len(),
            top.hidden_layers,
            top.neurons,
            top.learning_rate,
            top.grad_clip,
            top.epochs,
            top.val_loss
        );
        let mut written = vec![self.out.clone()];
        if let Some(path) = &self.best {
            save_checkpoint(path, &result.best)?;
            written.push(path.clone());
        }
        Ok(written)
    }
}
