use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::{NetworkCheckpoint, TrainingMeta};
use super::network::{Network, NetworkSpec};
use crate::dataset::{LabeledSample, NormalisationStats};
use crate::error::{Error, Result};

/// Learning rate as piecewise log-linear breakpoints `(fraction of training, lr)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub breakpoints: Vec<(f64, f64)>,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self::hold_decay(1e-2)
    }
}

impl LrSchedule {
    /// Holds `peak` for the first 60% of training, then decays to
    /// `peak * 1e-3`.
    pub fn hold_decay(peak: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, peak), (0.6, peak), (1.0, peak * 1e-3)],
        }
    }

    /// Rises from `peak * 1e-6` to `peak` over the first 30% of training,
    /// then decays to `peak * 1e-4`.
    pub fn one_cycle(peak: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, peak * 1e-6), (0.3, peak), (1.0, peak * 1e-4)],
        }
    }

    pub fn constant(lr: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, lr)],
        }
    }

    pub fn peak(&self) -> f64 {
        self.breakpoints.iter().map(|b| b.1).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = !self.breakpoints.is_empty()
            && self
                .breakpoints
                .iter()
                .all(|&(t, lr)| t.is_finite() && lr > 0.0 && lr.is_finite())
            && self.breakpoints.windows(2).all(|w| w[0].0 < w[1].0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "learning-rate breakpoints must have increasing positions and positive rates".into(),
            ))
        }
    }

    /// Learning rate at training fraction `t`, linear in log between breakpoints.
    pub fn at(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        if t <= b[0].0 {
            return b[0].1;
        }
        for w in b.windows(2) {
            let ((t0, l0), (t1, l1)) = (w[0], w[1]);
            if t <= t1 {
                if l0 == l1 {
                    return l0;
                }
                let s = (t - t0) / (t1 - t0);
                return (l0.ln() + s * (l1.ln() - l0.ln())).exp();
            }
        }
        b[b.len() - 1].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay applied to weights only.
    pub weight_decay: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    /// Restore the parameters of the best validation epoch at the end.
    #[serde(default = "default_true")]
    pub restore_best: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub batch_size: usize,
    pub schedule: LrSchedule,
    /// Weight of the differential term; 0 trains on values only.
    pub lambda: f64,
    pub optimizer: AdamW,
    pub grad_clip: Option<f64>,
    pub early_stopping: Option<EarlyStopping>,
    /// Explicit weight penalties; off by default.
    pub l1: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batches_per_epoch: 16,
            batch_size: 819,
            schedule: LrSchedule::default(),
            lambda: 1.0,
            optimizer: AdamW::default(),
            grad_clip: None,
            early_stopping: None,
            l1: 0.0,
            l2: 0.0,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batches_per_epoch == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs, batches_per_epoch and batch_size must be >= 1".into(),
            ));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: self.lambda,
                reason: "must be >= 0",
            });
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "grad_clip",
                    value: c,
                    reason: "must be > 0",
                });
            }
        }
        self.schedule.validate()
    }
}

/// Normalised splits plus the statistics that produced them.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub train: &'a [LabeledSample],
    pub val: &'a [LabeledSample],
    pub stats: &'a NormalisationStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate of the last step of the epoch.
    pub lr: f64,
    /// Largest global gradient norm before clipping.
    pub grad_norm_max: f64,
    /// Largest global gradient norm actually applied.
    pub applied_norm_max: f64,
    /// Steps on which clipping fired.
    pub clipped_steps: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: NetworkCheckpoint,
    pub history: Vec<EpochRecord>,
}

/// Combined cost of the network on `samples` (inference mode).
pub fn loss(net: &Network, samples: &[LabeledSample], weights: &[f64; 8], lambda: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for s in samples {
        let c = net.forward(&s.x, None);
        let e = c.output() - s.y;
        total += e * e;
        if lambda != 0.0 {
            let xbar = net.adjoint(&c);
            total += lambda * diff_term(&xbar, &s.xbar, weights);
        }
    }
    total / samples.len() as f64
}

/// Combined cost from given predictions, for checking the formula directly.
pub fn batch_loss(
    pred_y: &[f64],
    pred_xbar: &[[f64; 8]],
    samples: &[LabeledSample],
    weights: &[f64; 8],
    lambda: f64,
) -> f64 {
    let m = samples.len() as f64;
    let mut total = 0.0;
    for ((py, px), s) in pred_y.iter().zip(pred_xbar).zip(samples) {
        total += (py - s.y).powi(2) + lambda * diff_term(px, &s.xbar, weights);
    }
    total / m
}

#[inline]
fn diff_term(pred: &[f64], label: &[f64; 8], weights: &[f64; 8]) -> f64 {
    (0..8).map(|j| weights[j] * (pred[j] - label[j]).powi(2)).sum()
}

/// Value-only MSE of de-normalised predictions in basis points (1 bp = 1e-4).
pub fn evaluate_mse_bp(ckpt: &NetworkCheckpoint, raw: &[LabeledSample]) -> f64 {
    let mse = raw
        .iter()
        .map(|s| (super::predict_price(&s.x, ckpt) - s.y).powi(2))
        .sum::<f64>()
        / raw.len().max(1) as f64;
    mse / 1e-4
}

/// Combined cost on `samples` and its gradient with respect to every
/// network parameter (inference mode, no penalties).
pub fn loss_gradient(net: &Network, samples: &[LabeledSample], weights: &[f64; 8], lambda: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; net.n_params()];
    let refs: Vec<&LabeledSample> = samples.iter().collect();
    let l = accumulate(net, &refs, weights, lambda, |_| None, &mut grad);
    (l, grad)
}

/// Loss and parameter gradient on one batch.
fn accumulate(
    net: &Network,
    batch: &[&LabeledSample],
    weights: &[f64; 8],
    lambda: f64,
    mut masks: impl FnMut(&Network) -> Option<Vec<Vec<f64>>>,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let m = batch.len() as f64;
    let mut total = 0.0;
    let mut gx = [0.0; 8];
    for s in batch {
        let cache = net.forward(&s.x, masks(net));
        let e = cache.output() - s.y;
        total += e * e;
        if lambda != 0.0 {
            let xbar = net.adjoint(&cache);
            total += lambda * diff_term(&xbar, &s.xbar, weights);
            for j in 0..8 {
                gx[j] = 2.0 * lambda * weights[j] * (xbar[j] - s.xbar[j]) / m;
            }
        }
        net.backprop(&cache, 2.0 * e / m, &gx, grad);
    }
    total / m
}

fn add_penalties(net: &Network, mask: &[bool], l1: f64, l2: f64, grad: &mut [f64]) -> f64 {
    if l1 == 0.0 && l2 == 0.0 {
        return 0.0;
    }
    let mut pen = 0.0;
    for ((g, &p), &w) in grad.iter_mut().zip(&net.params).zip(mask) {
        if w {
            pen += l1 * p.abs() + l2 * p * p;
            *g += l1 * p.signum() + 2.0 * l2 * p;
        }
    }
    pen
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Mini-batch AdamW training on normalised data.
///
/// Each epoch reshuffles the training set and draws `batches_per_epoch`
/// consecutive batches of `batch_size`; a short final batch is kept. The
/// learning rate follows `schedule` per step. With `grad_clip` the global
/// gradient norm is rescaled to the threshold when it exceeds it. With
/// early stopping, training halts after `patience` epochs without a new
/// best validation loss and the best parameters are restored.
pub fn train(data: TrainingData<'_>, spec: &NetworkSpec, config: &TrainingConfig) -> Result<TrainOutcome> {
    config.validate()?;
    spec.validate()?;
    if spec.n_inputs != 8 {
        return Err(Error::InvalidArgument("training data has 8 inputs".into()));
    }
    if data.train.is_empty() {
        return Err(Error::InvalidArgument("empty training split".into()));
    }
    let weights = data.stats.differential_weights();
    let mut net = Network::new(spec, config.seed)?;
    let decay_mask = net.weight_mask();
    let n_params = net.n_params();
    let mut grad = vec![0.0; n_params];
    let mut m1 = vec![0.0; n_params];
    let mut m2 = vec![0.0; n_params];
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(2);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(3);

    let n = data.train.len();
    let n_batches = config.batches_per_epoch.min(n.div_ceil(config.batch_size));
    let total_steps = (config.epochs * n_batches) as f64;
    let opt = config.optimizer;
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut rec = EpochRecord {
            epoch: epoch + 1,
            train_loss: 0.0,
            val_loss: 0.0,
            lr: 0.0,
            grad_norm_max: 0.0,
            applied_norm_max: 0.0,
            clipped_steps: 0,
        };
        let mut seen = 0usize;
        for b in 0..n_batches {
            let lo = b * config.batch_size;
            let hi = (lo + config.batch_size).min(n);
            let batch: Vec<&LabeledSample> = order[lo..hi].iter().map(|&i| &data.train[i]).collect();
            let mut l = accumulate(
                &net,
                &batch,
                &weights,
                config.lambda,
                |n| n.sample_masks(&mut dropout_rng),
                &mut grad,
            );
            l += add_penalties(&net, &decay_mask, config.l1, config.l2, &mut grad);
            let g_norm = norm(&grad);
            if !l.is_finite() || !g_norm.is_finite() {
                return Err(Error::Diverged {
                    epoch: epoch + 1,
                    batch: b + 1,
                    grad_norm: g_norm,
                });
            }
            rec.grad_norm_max = rec.grad_norm_max.max(g_norm);
            let mut applied = g_norm;
            if let Some(c) = config.grad_clip {
                if g_norm > c {
                    let s = c / g_norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                    applied = norm(&grad);
                    rec.clipped_steps += 1;
                }
            }
            rec.applied_norm_max = rec.applied_norm_max.max(applied);

            let lr = config.schedule.at(step as f64 / total_steps);
            step += 1;
            let t = step as i32;
            let c1 = 1.0 - opt.beta1.powi(t);
            let c2 = 1.0 - opt.beta2.powi(t);
            for i in 0..n_params {
                let g = grad[i];
                m1[i] = opt.beta1 * m1[i] + (1.0 - opt.beta1) * g;
                m2[i] = opt.beta2 * m2[i] + (1.0 - opt.beta2) * g * g;
                let upd = (m1[i] / c1) / ((m2[i] / c2).sqrt() + opt.eps);
                let decay = if decay_mask[i] {
                    opt.weight_decay * net.params[i]
                } else {
                    0.0
                };
                net.params[i] -= lr * (upd + decay);
            }
            rec.lr = lr;
            rec.train_loss += l * batch.len() as f64;
            seen += batch.len();
        }
        rec.train_loss /= seen as f64;
        rec.val_loss = if data.val.is_empty() {
            rec.train_loss
        } else {
            loss(&net, data.val, &weights, config.lambda)
        };
        if !rec.val_loss.is_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                batch: n_batches,
                grad_norm: rec.grad_norm_max,
            });
        }
        log::debug!(
            "epoch {:>4} train {:.6e} val {:.6e} lr {:.3e} |g|max {:.3e}",
            rec.epoch,
            rec.train_loss,
            rec.val_loss,
            rec.lr,
            rec.grad_norm_max
        );
        history.push(rec);
        let improved = best.as_ref().is_none_or(|(v, _, _)| rec.val_loss < *v);
        if improved {
            best = Some((rec.val_loss, rec.epoch, net.params.clone()));
        }
        if let (Some(es), Some((_, best_epoch, _))) = (config.early_stopping, &best) {
            if rec.epoch - best_epoch >= es.patience {
                break;
            }
        }
    }

    let last = *history.last().expect("at least one epoch");
    let (mut final_train, mut final_val, mut best_epoch) = (last.train_loss, last.val_loss, last.epoch);
    if let (Some(es), Some((v, e, params))) = (config.early_stopping, best) {
        if es.restore_best {
            net.params = params;
            final_val = v;
            best_epoch = e;
            final_train = history[e - 1].train_loss;
        }
    }
    let meta = TrainingMeta {
        epochs_run: history.len(),
        best_epoch,
        final_train_loss: final_train,
        final_val_loss: final_val,
        lambda: config.lambda,
        seed: config.seed,
    };
    Ok(TrainOutcome {
        checkpoint: NetworkCheckpoint {
            network: net,
            stats: data.stats.clone(),
            meta,
        },
        history,
    })
}

/// Writes `epoch,train_loss,val_loss,lr,grad_norm_max`.
pub fn write_history<W: Write>(mut out: W, history: &[EpochRecord]) -> Result<()> {
    writeln!(out, "epoch,train_loss,val_loss,lr,grad_norm_max")?;
    for r in history {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.epoch, r.train_loss, r.val_loss, r.lr, r.grad_norm_max
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_interpolates_in_log_space() {
        let s = LrSchedule::default();
        assert_eq!(s.at(0.0), 1e-2);
        assert_eq!(s.at(0.6), 1e-2);
        assert!((s.at(0.8) - (1e-2f64 * 1e-5).sqrt()).abs() < 1e-17);
        assert!((s.at(1.0) - 1e-5).abs() < 1e-18);
        let c = LrSchedule::one_cycle(1e-2);
        assert!((c.at(0.15) - 1e-5).abs() < 1e-17);
        assert_eq!(LrSchedule::constant(0.01).at(0.7), 0.01);
    }

    #[test]
    fn loss_formula_by_hand() {
        let s = |y: f64, xbar: [f64; 8]| LabeledSample { x: [0.0; 8], y, xbar };
        let samples = [s(1.0, [1.0; 8]), s(-1.0, [0.0; 8])];
        let mut w = [0.0; 8];
        w[0] = 2.0;
        w[3] = 0.5;
        let py = [1.5, -1.0];
        let mut a = [1.0; 8];
        a[0] = 2.0;
        a[3] = 3.0;
        let mut b = [0.0; 8];
        b[0] = -1.0;
        let px = [a, b];
        // values: (0.25 + 0) / 2
        // diffs: sample 1: 2*1 + 0.5*4 = 4, sample 2: 2*1 = 2 -> lambda 3 -> 3*6/2 = 9
        assert!((batch_loss(&py, &px, &samples, &w, 0.0) - 0.125).abs() < 1e-15);
        assert!((batch_loss(&py, &px, &samples, &w, 3.0) - 9.125).abs() < 1e-15);
        let exact: Vec<[f64; 8]> = samples.iter().map(|s| s.xbar).collect();
        let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
        assert_eq!(batch_loss(&ys, &exact, &samples, &w, 1.0), 0.0);
    }
}
