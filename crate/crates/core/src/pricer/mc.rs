//! Monte-Carlo reference pricer: full-truncation Euler on the variance with
//! an Euler step on log-spot. Used as an independent oracle for the
//! semi-analytic prices.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::params::{HestonParams, MarketPoint};
use crate::error::{Error, Result};

const CHUNK: usize = 8192;

/// Monte-Carlo estimate of the normalised forward put with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Sum and sum of squares of `payoff(x_T - m)` over `n` paths of one chunk,
/// where `x` is log-moneyness started at `m`.
fn run_chunk<P: Fn(f64) -> f64>(
    point: &MarketPoint,
    params: &HestonParams,
    n: usize,
    n_steps: usize,
    seed: u64,
    chunk: u64,
    payoff: &P,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let dt = point.tau / n_steps as f64;
    let sqrt_dt = dt.sqrt();
    let rho_c = (1.0 - params.rho * params.rho).sqrt();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let mut x = point.m;
        let mut v = params.v0;
        for _ in 0..n_steps {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let vp = v.max(0.0);
            let sv = vp.sqrt();
            let zv = params.rho * z1 + rho_c * z2;
            x += (point.r - 0.5 * vp) * dt + sv * sqrt_dt * z1;
            v += params.kappa * (params.theta - vp) * dt + params.sigma * sv * sqrt_dt * zv;
        }
        let y = payoff(x);
        sum += y;
        sum_sq += y * y;
    }
    (sum, sum_sq)
}

fn simulate<P: Fn(f64) -> f64 + Sync>(
    point: &MarketPoint,
    params: &HestonParams,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    payoff: P,
) -> Result<McEstimate> {
    point.validate()?;
    params.validate()?;
    if n_paths < 2 {
        return Err(Error::InvalidArgument(format!("n_paths must be >= 2, got {n_paths}")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
    }
    let n_chunks = n_paths.div_ceil(CHUNK);
    let chunk_len = |c: usize| CHUNK.min(n_paths - c * CHUNK);

    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        (0..n_chunks)
            .into_par_iter()
            .map(|c| run_chunk(point, params, chunk_len(c), n_steps, seed, c as u64, &payoff))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64)> = (0..n_chunks)
        .map(|c| run_chunk(point, params, chunk_len(c), n_steps, seed, c as u64, &payoff))
        .collect();

    let (sum, sum_sq) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = n_paths as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / n).sqrt(),
    })
}

/// Prices the normalised forward put `E[(1 - S_T/K)^+]` by simulation.
///
/// Deterministic for a given `(seed, n_paths, n_steps)`: paths are drawn in
/// fixed-size chunks, each on its own ChaCha stream, and reduced in order.
pub fn mc_price(
    point: &MarketPoint,
    params: &HestonParams,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    simulate(point, params, n_paths, n_steps, seed, |x| (1.0 - x.exp()).max(0.0))
}

/// Estimates `E[S_T / F]`, the forward moment matched by `phi_tau(-i) = 1`.
pub fn mc_forward_moment(
    params: &HestonParams,
    tau: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<McEstimate> {
    let point = MarketPoint { m: 0.0, tau, r: 0.0 };
    simulate(&point, params, n_paths, n_steps, seed, f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricer::black_scholes::bs_normalised_put;

    #[test]
    fn deterministic_variance_matches_black_scholes() {
        let params = HestonParams::new(1.0, 0.04, 1e-4, 0.0, 0.04).unwrap();
        let point = MarketPoint::new(0.05, 1.0, 0.02).unwrap();
        let mc = mc_price(&point, &params, 200_000, 50, 7).unwrap();
        let bs = bs_normalised_put(point.log_forward(), 1.0, 0.2);
        assert!((mc.estimate - bs).abs() < 3.0 * mc.std_error, "{mc:?} vs {bs}");
    }

    #[test]
    fn zero_paths_rejected() {
        let params = HestonParams::new(1.0, 0.04, 0.3, 0.0, 0.04).unwrap();
        let point = MarketPoint::new(0.0, 1.0, 0.0).unwrap();
        assert!(mc_price(&point, &params, 0, 10, 1).is_err());
        assert!(mc_price(&point, &params, 100, 0, 1).is_err());
    }

    #[test]
    fn seeded_runs_repeat() {
        let params = HestonParams::new(1.0, 0.04, 0.3, -0.4, 0.04).unwrap();
        let point = MarketPoint::new(0.0, 0.5, 0.01).unwrap();
        let a = mc_price(&point, &params, 20_000, 20, 11).unwrap();
        let b = mc_price(&point, &params, 20_000, 20, 11).unwrap();
        assert_eq!(a, b);
    }
}
