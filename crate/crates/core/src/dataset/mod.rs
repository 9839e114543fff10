//! Synthetic training universe: Latin-hypercube draws over the eight inputs,
//! labels from the semi-analytic pricer, differential labels from the
//! closed-form sensitivities, splitting and normalisation.
//!
//! Inputs are always in the order `(m, tau, r, kappa, v0, theta, sigma, rho)`.

mod io;
mod lhs;
mod normalise;

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricer::{from_inputs, QuadratureConfig};
use crate::sensitivities::price_and_gradient;

pub use io::{read_csv, read_sidecar, write_csv, write_sidecar, DatasetMeta, CSV_HEADER};
pub use lhs::lhs_sample;
pub use normalise::{fit_normaliser, NormalisationStats};

/// Lower bound substituted for a zero lower bound on `v0` and `theta`.
pub const VARIANCE_FLOOR: f64 = 1e-4;

/// Closed sampling interval per input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingRanges {
    pub m: [f64; 2],
    pub tau: [f64; 2],
    pub r: [f64; 2],
    pub kappa: [f64; 2],
    pub v0: [f64; 2],
    pub theta: [f64; 2],
    pub sigma: [f64; 2],
    pub rho: [f64; 2],
}

impl Default for SamplingRanges {
    fn default() -> Self {
        Self {
            m: [-2.0, 2.0],
            tau: [0.05, 20.0],
            r: [-0.01, 0.10],
            kappa: [0.005, 3.0],
            v0: [0.0, 1.0],
            theta: [0.0, 1.0],
            sigma: [0.1, 2.0],
            rho: [-0.90, 0.0],
        }
    }
}

impl SamplingRanges {
    pub fn as_array(&self) -> [[f64; 2]; 8] {
        [
            self.m, self.tau, self.r, self.kappa, self.v0, self.theta, self.sigma, self.rho,
        ]
    }

    pub fn from_array(a: [[f64; 2]; 8]) -> Self {
        Self {
            m: a[0],
            tau: a[1],
            r: a[2],
            kappa: a[3],
            v0: a[4],
            theta: a[5],
            sigma: a[6],
            rho: a[7],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in crate::pricer::INPUT_NAMES.iter().zip(self.as_array()) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "range for {name} must satisfy lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Ranges actually sampled: `v0` and `theta` are lifted to [`VARIANCE_FLOOR`].
    pub fn effective(&self) -> Self {
        let mut r = *self;
        r.v0[0] = r.v0[0].max(VARIANCE_FLOOR);
        r.theta[0] = r.theta[0].max(VARIANCE_FLOOR);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FellerMode {
    Require,
    Allow,
}

/// Inputs, normalised forward put and its eight partials (input order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub x: [f64; 8],
    pub y: f64,
    pub xbar: [f64; 8],
}

impl LabeledSample {
    pub fn feller_satisfied(&self) -> bool {
        from_inputs(&self.x).1.feller_satisfied()
    }
}

/// Labels one input vector.
pub fn label(x: [f64; 8], quad: &QuadratureConfig) -> Result<LabeledSample> {
    let (point, params) = from_inputs(&x);
    point.validate()?;
    params.validate_for_pricing()?;
    let pg = price_and_gradient(&point, &params, quad)?;
    if !pg.gradient.is_finite() {
        return Err(Error::Domain {
            what: "dataset label",
            detail: format!("non-finite gradient at {x:?}"),
        });
    }
    Ok(LabeledSample {
        x,
        y: pg.price,
        xbar: pg.gradient.to_input_order(),
    })
}

// Replacement draws keep the market coordinates of the stratum and redraw
// the five model parameters uniformly over their ranges.
fn redraw(x: &mut [f64; 8], ranges: &[[f64; 2]; 8], rng: &mut ChaCha8Rng) {
    for (j, [lo, hi]) in ranges.iter().enumerate().skip(3) {
        x[j] = lo + rng.random::<f64>() * (hi - lo);
    }
}

const MAX_REDRAWS: usize = 100_000;

enum Outcome {
    Done(LabeledSample, usize),
    Exhausted,
}

fn generate_one(
    mut x: [f64; 8],
    ranges: &[[f64; 2]; 8],
    mode: FellerMode,
    quad: &QuadratureConfig,
    seed: u64,
    index: usize,
) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    let mut failures = 0;
    for _ in 0..MAX_REDRAWS {
        if mode == FellerMode::Require && !from_inputs(&x).1.feller_satisfied() {
            redraw(&mut x, ranges, &mut rng);
            continue;
        }
        match label(x, quad) {
            Ok(s) => return Outcome::Done(s, failures),
            Err(e) => {
                log::warn!("sample {index}: pricer failed ({e}); redrawing");
                failures += 1;
                redraw(&mut x, ranges, &mut rng);
            }
        }
    }
    Outcome::Exhausted
}

/// Generates `n` labelled samples. See [`generate_with_progress`].
pub fn generate(
    n: usize,
    ranges: &SamplingRanges,
    mode: FellerMode,
    quad: &QuadratureConfig,
    seed: u64,
) -> Result<Vec<LabeledSample>> {
    generate_with_progress(n, ranges, mode, quad, seed, &|_| {})
}

/// Generates `n` labelled samples from an LHS design.
///
/// In [`FellerMode::Require`] a draw violating `2 kappa theta > sigma^2` has
/// its model parameters redrawn until it passes, so the count is exact and
/// the stratification of those five inputs is only approximate. Pricer
/// failures are redrawn the same way; more than 1% failures aborts.
/// The output order is the design order whatever the scheduling.
/// `progress` receives the number of completed samples.
pub fn generate_with_progress(
    n: usize,
    ranges: &SamplingRanges,
    mode: FellerMode,
    quad: &QuadratureConfig,
    seed: u64,
    progress: &(dyn Fn(usize) + Sync),
) -> Result<Vec<LabeledSample>> {
    ranges.validate()?;
    quad.validate()?;
    let eff = ranges.effective();
    let bounds = eff.as_array();
    let design = lhs_sample(n, &eff, seed)?;
    let done = AtomicUsize::new(0);
    let work = |(i, x): (usize, [f64; 8])| {
        let out = generate_one(x, &bounds, mode, quad, seed, i);
        progress(done.fetch_add(1, Ordering::Relaxed) + 1);
        out
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Outcome> = {
        use rayon::prelude::*;
        design.into_par_iter().enumerate().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Outcome> = design.into_iter().enumerate().map(work).collect();

    let mut failures = 0;
    let mut samples = Vec::with_capacity(n);
    for o in outcomes {
        match o {
            Outcome::Done(s, f) => {
                failures += f;
                samples.push(s);
            }
            Outcome::Exhausted => {
                return Err(Error::InvalidArgument(
                    "no admissible sample found after repeated redraws; check the sampling ranges".into(),
                ))
            }
        }
    }
    if failures * 100 > n {
        return Err(Error::Domain {
            what: "dataset generation",
            detail: format!("{failures} pricer failures for {n} samples exceeds 1%"),
        });
    }
    Ok(samples)
}

/// Train / validation / test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Random disjoint split. Train and validation sizes are `floor(ratio n)`;
/// the test split takes the remainder.
pub fn split<T: Clone>(samples: &[T], ratios: (f64, f64, f64), seed: u64) -> Result<Split<T>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty dataset".into()));
    }
    let (a, b, c) = ratios;
    if !(a > 0.0 && b >= 0.0 && c >= 0.0 && ((a + b + c) - 1.0).abs() < 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be non-negative and sum to 1, got {ratios:?}"
        )));
    }
    let n = samples.len();
    let n_train = (a * n as f64 + 1e-9).floor() as usize;
    let n_val = (b * n as f64 + 1e-9).floor() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut rng);
    let take = |r: &[usize]| r.iter().map(|&i| samples[i].clone()).collect::<Vec<T>>();
    Ok(Split {
        train: take(&idx[..n_train]),
        val: take(&idx[n_train..n_train + n_val]),
        test: take(&idx[n_train + n_val..]),
    })
}
