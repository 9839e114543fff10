use std::io::Write;

use serde::{Deserialize, Serialize};

use super::checkpoint::NetworkCheckpoint;
use super::network::NetworkSpec;
use super::train::{train, LrSchedule, TrainingConfig, TrainingData};
use crate::error::{Error, Result};

/// Exhaustive search space. Every combination is trained once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub hidden_layers: Vec<usize>,
    pub neurons: Vec<usize>,
    /// Peak learning rates.
    pub learning_rates: Vec<f64>,
    /// Use a constant rate instead of the hold-then-decay schedule.
    pub constant_lr: bool,
    /// Clipping thresholds; a value `<= 0` disables clipping.
    pub grad_clips: Vec<f64>,
    pub epochs: Vec<usize>,
    /// Upper bound on the number of runs.
    pub budget: Option<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            hidden_layers: vec![4],
            neurons: vec![50],
            learning_rates: vec![1e-2],
            constant_lr: false,
            grad_clips: vec![0.0],
            epochs: vec![50],
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub hidden_layers: usize,
    pub neurons: usize,
    pub learning_rate: f64,
    pub grad_clip: Option<f64>,
    pub epochs: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    /// Sorted by validation loss, best first.
    pub leaderboard: Vec<LeaderboardRow>,
    pub best: NetworkCheckpoint,
    pub best_spec: NetworkSpec,
    pub best_config: TrainingConfig,
}

/// Trains every combination of `space` from `base_spec` / `base_config`
/// and returns the one with the lowest final validation loss.
pub fn grid_search(
    data: TrainingData<'_>,
    base_spec: &NetworkSpec,
    base_config: &TrainingConfig,
    space: &SearchSpace,
) -> Result<GridResult> {
    let mut combos = Vec::new();
    for &h in &space.hidden_layers {
        for &n in &space.neurons {
            for &lr in &space.learning_rates {
                for &c in &space.grad_clips {
                    for &e in &space.epochs {
                        combos.push((h, n, lr, (c > 0.0).then_some(c), e));
                    }
                }
            }
        }
    }
    if combos.is_empty() {
        return Err(Error::InvalidArgument("search space is empty".into()));
    }
    if let Some(b) = space.budget {
        combos.truncate(b);
    }

    let mut rows = Vec::with_capacity(combos.len());
    let mut best: Option<(f64, NetworkCheckpoint, NetworkSpec, TrainingConfig)> = None;
    for (h, n, lr, clip, epochs) in combos {
        let spec = NetworkSpec {
            hidden_layers: h,
            neurons: n,
            ..base_spec.clone()
        };
        let config = TrainingConfig {
            epochs,
            grad_clip: clip,
            schedule: if space.constant_lr {
                LrSchedule::constant(lr)
            } else {
                LrSchedule::hold_decay(lr)
            },
            ..base_config.clone()
        };
        let out = train(data, &spec, &config)?;
        let m = &out.checkpoint.meta;
        log::info!(
            "grid {h}x{n} lr {lr:e} clip {clip:?} epochs {epochs}: val {:.6e}",
            m.final_val_loss
        );
        rows.push(LeaderboardRow {
            rank: 0,
            hidden_layers: h,
            neurons: n,
            learning_rate: lr,
            grad_clip: clip,
            epochs,
            train_loss: m.final_train_loss,
            val_loss: m.final_val_loss,
        });
        if best.as_ref().is_none_or(|b| m.final_val_loss < b.0) {
            best = Some((m.final_val_loss, out.checkpoint, spec, config));
        }
    }
    // Stable sort keeps enumeration order among ties.
    rows.sort_by(|a, b| a.val_loss.total_cmp(&b.val_loss));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    let (_, best, best_spec, best_config) = best.expect("non-empty search");
    Ok(GridResult {
        leaderboard: rows,
        best,
        best_spec,
        best_config,
    })
}

pub fn write_leaderboard<W: Write>(mut out: W, rows: &[LeaderboardRow]) -> Result<()> {
    writeln!(
        out,
        "rank,hidden_layers,neurons,learning_rate,grad_clip,epochs,train_loss,val_loss"
    )?;
    for r in rows {
        let clip = r.grad_clip.map(|c| format!("{c}")).unwrap_or_else(|| "none".into());
        writeln!(
            out,
            "{},{},{},{:e},{},{},{:.16e},{:.16e}",
            r.rank, r.hidden_layers, r.neurons, r.learning_rate, clip, r.epochs, r.train_loss, r.val_loss
        )?;
    }
    Ok(())
}
