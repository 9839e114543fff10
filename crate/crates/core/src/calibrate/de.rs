use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use super::{OptimOutcome, TraceRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Mutation base is the current population best.
    Best1Bin,
    /// Mutation base is a random member.
    Rand1Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    pub strategy: Strategy,
    pub generations: usize,
    /// Total number of individuals.
    pub population: usize,
    /// Stops when `std(objectives) <= tol * |mean(objectives)|`.
    pub tol: f64,
    /// Differential weight.
    pub f: f64,
    /// Crossover probability.
    pub cr: f64,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Best1Bin,
            generations: 90,
            population: 50,
            tol: 1e-6,
            f: 0.5,
            cr: 0.7,
            seed: 0,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidParameter {
                name: "population",
                value: self.population as f64,
                reason: "must be >= 4 so that three distinct donors exist",
            });
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(Error::InvalidParameter {
                name: "f",
                value: self.f,
                reason: "must lie in (0, 2]",
            });
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::InvalidParameter {
                name: "cr",
                value: self.cr,
                reason: "must lie in [0, 1]",
            });
        }
        if self.tol < 0.0 || self.tol.is_nan() {
            return Err(Error::InvalidParameter {
                name: "tol",
                value: self.tol,
                reason: "must be >= 0",
            });
        }
        Ok(())
    }
}

fn evaluate_all<F>(f: &F, xs: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let eval = |x: &Vec<f64>| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        xs.par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        xs.iter().map(eval).collect()
    }
}

/// Latin-hypercube initial population over the box.
fn initial_population(bounds: &[[f64; 2]], size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut pop = vec![vec![0.0; bounds.len()]; size];
    for (j, [lo, hi]) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..size).collect();
        strata.shuffle(rng);
        for (ind, s) in pop.iter_mut().zip(strata) {
            let u = (s as f64 + rng.random::<f64>()) / size as f64;
            ind[j] = lo + u * (hi - lo);
        }
    }
    pop
}

fn distinct(rng: &mut ChaCha8Rng, n: usize, exclude: usize, k: usize) -> Vec<usize> {
    let mut picks = Vec::with_capacity(k);
    while picks.len() < k {
        let c = rng.random_range(0..n);
        if c != exclude && !picks.contains(&c) {
            picks.push(c);
        }
    }
    picks
}

fn spread_converged(values: &[f64], tol: f64) -> bool {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.is_finite() && var.sqrt() <= tol * mean.abs()
}

/// Bounded differential evolution. Trial vectors for a generation are
/// drawn first, evaluated (concurrently with the `parallel` feature) and
/// then selected greedily, so results do not depend on thread count.
pub fn minimize<F>(f: F, bounds: &[[f64; 2]], config: &DeConfig) -> Result<OptimOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("nothing to optimise".into()));
    }
    for &[lo, hi] in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("invalid bound [{lo}, {hi}]")));
        }
    }
    let start = Instant::now();
    let dim = bounds.len();
    let np = config.population;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut pop = initial_population(bounds, np, &mut rng);
    let mut values = evaluate_all(&f, &pop);
    let mut evaluations = np;
    let best_of = |values: &[f64]| {
        (0..values.len())
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .unwrap()
    };
    let mut best = best_of(&values);

    let mut trace = vec![TraceRow {
        iter: 0,
        best_objective: values[best],
        elapsed_s: start.elapsed().as_secs_f64(),
    }];
    let mut converged = false;
    let mut generation = 0;
    while generation < config.generations {
        generation += 1;
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mutant: Vec<f64> = match config.strategy {
                    Strategy::Best1Bin => {
                        let r = distinct(&mut rng, np, i, 2);
                        (0..dim)
                            .map(|j| pop[best][j] + config.f * (pop[r[0]][j] - pop[r[1]][j]))
                            .collect()
                    }
                    Strategy::Rand1Bin => {
                        let r = distinct(&mut rng, np, i, 3);
                        (0..dim)
                            .map(|j| pop[r[0]][j] + config.f * (pop[r[1]][j] - pop[r[2]][j]))
                            .collect()
                    }
                };
                let forced = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        let take = j == forced || rng.random::<f64>() < config.cr;
                        let v = if take { mutant[j] } else { pop[i][j] };
                        v.clamp(bounds[j][0], bounds[j][1])
                    })
                    .collect()
            })
            .collect();
        let trial_values = evaluate_all(&f, &trials);
        evaluations += np;
        for (i, (t, v)) in trials.into_iter().zip(trial_values).enumerate() {
            if v <= values[i] {
                pop[i] = t;
                values[i] = v;
            }
        }
        best = best_of(&values);
        trace.push(TraceRow {
            iter: generation,
            best_objective: values[best],
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        if spread_converged(&values, config.tol) {
            converged = true;
            break;
        }
    }

    Ok(OptimOutcome {
        x: pop.swap_remove(best),
        value: values[best],
        final_values: values.clone(),
        iterations: generation,
        evaluations,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| (v - 0.3).powi(2)).sum()
    }

    #[test]
    fn small_population_is_rejected() {
        let config = DeConfig {
            population: 3,
            ..Default::default()
        };
        assert!(matches!(
            minimize(sphere, &[[-1.0, 1.0]], &config),
            Err(Error::InvalidParameter { name: "population", .. })
        ));
    }

    #[test]
    fn elitism_and_bounds() {
        let bounds = [[-1.0, 1.0], [0.5, 2.0]];
        for strategy in [Strategy::Best1Bin, Strategy::Rand1Bin] {
            let config = DeConfig {
                strategy,
                generations: 60,
                ..Default::default()
            };
            let out = minimize(sphere, &bounds, &config).unwrap();
            assert!(out.trace.windows(2).all(|w| w[1].best_objective <= w[0].best_objective));
            assert!(out.x.iter().zip(&bounds).all(|(v, b)| *v >= b[0] && *v <= b[1]));
            // Second coordinate is pinned at its lower bound.
            assert!(
                (out.x[0] - 0.3).abs() < 1e-2 && (out.x[1] - 0.5).abs() < 1e-2,
                "{:?}",
                out.x
            );
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let bounds = [[-2.0, 2.0]; 3];
        let config = DeConfig {
            seed: 9,
            ..Default::default()
        };
        let a = minimize(sphere, &bounds, &config).unwrap();
        let b = minimize(sphere, &bounds, &config).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
