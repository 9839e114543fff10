//! Fitting Heston parameters to put quotes.
//!
//! The objective is the weighted root-mean-square price error
//! `sqrt(sum_i w_i (V^_i - V_i)^2)` with `V^ = K e^{-r tau} P^` and `P^`
//! taken either from the semi-analytic pricer or from a trained network.
//! Parameters outside the box are not rejected; they score
//! `1e6 (1 + distance to the box)` so simplex methods can walk back.

mod de;
mod nelder_mead;

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::dataset::SamplingRanges;
use crate::error::{Error, Result};
use crate::pricer::{normalised_forward_put, to_inputs, HestonParams, MarketPoint, QuadratureConfig};
use crate::twinnet::{predict_price, NetworkCheckpoint};

pub use de::{minimize as de_minimize, DeConfig, Strategy};
pub use nelder_mead::{minimize as nelder_mead_minimize, NelderMeadConfig};

/// Parameter names in [`HestonParams::to_array`] order.
pub const PARAM_NAMES: [&str; 5] = ["kappa", "theta", "sigma", "rho", "v0"];

/// Mean-reversion speed held fixed in the three-parameter mode.
pub const THREE_PARAM_KAPPA: f64 = 0.15;

/// Objective value assigned at the box boundary.
pub const PENALTY: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    /// Maturity in years.
    pub tau: f64,
    pub strike: f64,
    /// Market put price.
    pub price: f64,
    /// Continuously compounded rate for this maturity.
    pub rate: f64,
}

impl Quote {
    pub fn point(&self, spot: f64) -> MarketPoint {
        MarketPoint {
            m: (spot / self.strike).ln(),
            tau: self.tau,
            r: self.rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteSet {
    pub spot: f64,
    pub quotes: Vec<Quote>,
}

impl QuoteSet {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "spot",
                value: self.spot,
                reason: "must be > 0",
            });
        }
        if self.quotes.is_empty() {
            return Err(Error::InvalidArgument("quote set is empty".into()));
        }
        for (i, q) in self.quotes.iter().enumerate() {
            if !(q.tau > 0.0 && q.strike > 0.0 && q.price > 0.0 && q.rate.is_finite() && q.price.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "quote {i} needs tau > 0, strike > 0 and price > 0 (got tau={}, strike={}, price={})",
                    q.tau, q.strike, q.price
                )));
            }
        }
        Ok(())
    }

    /// Distinct maturities in ascending order.
    pub fn maturities(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.quotes.iter().map(|q| q.tau).collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

#[derive(Clone)]
pub enum Backend {
    Analytic(QuadratureConfig),
    Network(Arc<NetworkCheckpoint>),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Analytic(_) => "analytic",
            Backend::Network(_) => "network",
        }
    }
}

impl fmt::Debug for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Analytic(q) => f.debug_tuple("Analytic").field(q).finish(),
            Backend::Network(c) => write!(f, "Network({:?})", c.network.spec),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    pub quotes: QuoteSet,
    pub weights: Vec<f64>,
    /// Box per parameter in [`PARAM_NAMES`] order.
    pub bounds: [[f64; 2]; 5],
    pub free: [bool; 5],
    /// Values used for parameters that are not free.
    pub fixed: [f64; 5],
    pub backend: Backend,
}

/// Parameter box of the training universe, in [`PARAM_NAMES`] order.
pub fn default_bounds() -> [[f64; 2]; 5] {
    let r = SamplingRanges::default();
    [r.kappa, r.theta, r.sigma, r.rho, r.v0]
}

/// Starting point for the five-parameter fit.
pub fn default_initial_five() -> HestonParams {
    HestonParams {
        kappa: 1.4719,
        theta: 0.1021,
        sigma: 1.5986,
        rho: -0.3899,
        v0: 1.12e-5,
    }
}

/// Starting `(theta, sigma, rho)` for the three-parameter fit.
pub fn default_initial_three() -> [f64; 3] {
    [0.2752, 0.4571, -0.4477]
}

/// `v0` approximated by the squared at-the-money implied volatility.
pub fn fix_v0_from_atm_iv(atm_iv: f64) -> f64 {
    atm_iv * atm_iv
}

impl CalibrationProblem {
    /// All five parameters free, equal weights, default bounds.
    pub fn five(quotes: QuoteSet, backend: Backend) -> Result<Self> {
        let n = quotes.quotes.len().max(1);
        let p = Self {
            weights: vec![1.0 / n as f64; quotes.quotes.len()],
            quotes,
            bounds: default_bounds(),
            free: [true; 5],
            fixed: [0.0; 5],
            backend,
        };
        p.validate()?;
        Ok(p)
    }

    /// `theta`, `sigma`, `rho` free; `kappa` = [`THREE_PARAM_KAPPA`] and the given `v0`.
    pub fn three(quotes: QuoteSet, backend: Backend, v0: f64) -> Result<Self> {
        let mut p = Self::five(quotes, backend)?;
        p.free = [false, true, true, true, false];
        p.fixed = [THREE_PARAM_KAPPA, 0.0, 0.0, 0.0, v0];
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.quotes.validate()?;
        if self.weights.len() != self.quotes.quotes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} quotes",
                self.weights.len(),
                self.quotes.quotes.len()
            )));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        if !self.free.iter().any(|&f| f) {
            return Err(Error::InvalidArgument("at least one parameter must be free".into()));
        }
        for (name, [lo, hi]) in PARAM_NAMES.iter().zip(self.bounds) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "bounds for {name} must satisfy lower < upper"
                )));
            }
        }
        for i in (0..5).filter(|&i| !self.free[i]) {
            if !self.in_bounds_at(i, self.fixed[i]) {
                return Err(Error::InvalidArgument(format!(
                    "fixed {} = {} lies outside [{}, {}]",
                    PARAM_NAMES[i], self.fixed[i], self.bounds[i][0], self.bounds[i][1]
                )));
            }
        }
        Ok(())
    }

    fn in_bounds_at(&self, i: usize, v: f64) -> bool {
        v >= self.bounds[i][0] && v <= self.bounds[i][1]
    }

    pub fn n_free(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn free_bounds(&self) -> Vec<[f64; 2]> {
        (0..5).filter(|&i| self.free[i]).map(|i| self.bounds[i]).collect()
    }

    /// Full parameter set from the free coordinates.
    pub fn assemble(&self, x: &[f64]) -> HestonParams {
        let mut a = self.fixed;
        let mut it = x.iter();
        for i in 0..5 {
            if self.free[i] {
                a[i] = *it.next().expect("one value per free parameter");
            }
        }
        HestonParams::from_array(a)
    }

    /// Free coordinates of a full parameter set.
    pub fn free_values(&self, params: &HestonParams) -> Vec<f64> {
        let a = params.to_array();
        (0..5).filter(|&i| self.free[i]).map(|i| a[i]).collect()
    }

    /// Euclidean distance from `params` to the box; zero inside.
    pub fn bound_distance(&self, params: &HestonParams) -> f64 {
        params
            .to_array()
            .iter()
            .zip(self.bounds)
            .map(|(&v, [lo, hi])| {
                let d = if v < lo {
                    lo - v
                } else if v > hi {
                    v - hi
                } else {
                    0.0
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn model_prices(&self, params: &HestonParams) -> Result<Vec<f64>> {
        self.quotes
            .quotes
            .iter()
            .map(|q| model_price(q, self.quotes.spot, params, &self.backend))
            .collect()
    }
}

/// `K e^{-r tau} P^` for one quote.
pub fn model_price(q: &Quote, spot: f64, params: &HestonParams, backend: &Backend) -> Result<f64> {
    let point = q.point(spot);
    let p_hat = match backend {
        Backend::Analytic(quad) => normalised_forward_put(&point, params, quad)?,
        Backend::Network(ckpt) => predict_price(&to_inputs(&point, params), ckpt),
    };
    Ok(q.strike * (-q.rate * q.tau).exp() * p_hat)
}

/// Weighted RMSE, or the boundary penalty outside the box.
pub fn objective(params: &HestonParams, problem: &CalibrationProblem) -> Result<f64> {
    let dist = problem.bound_distance(params);
    if dist > 0.0 || dist.is_nan() {
        return Ok(PENALTY * (1.0 + if dist.is_nan() { 1.0 } else { dist }));
    }
    let mut sum = 0.0;
    for (q, w) in problem.quotes.quotes.iter().zip(&problem.weights) {
        let v = model_price(q, problem.quotes.spot, params, &problem.backend)?;
        sum += w * (v - q.price).powi(2);
    }
    Ok(sum.sqrt())
}

/// One row of an optimiser trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub best_objective: f64,
    pub elapsed_s: f64,
}

/// Result of a generic minimisation.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    /// Objective of every simplex vertex or population member at exit.
    pub final_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub optimizer: String,
    pub backend: String,
    pub params: HestonParams,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub wall_clock_s: f64,
    pub trace: Vec<TraceRow>,
    pub final_values: Vec<f64>,
}

fn scalar_objective(problem: &CalibrationProblem) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |x: &[f64]| match objective(&problem.assemble(x), problem) {
        Ok(v) => v,
        Err(e) => {
            log::debug!("objective failed: {e}");
            f64::INFINITY
        }
    }
}

fn finish(problem: &CalibrationProblem, optimizer: &str, out: OptimOutcome, wall_clock_s: f64) -> CalibrationResult {
    CalibrationResult {
        optimizer: optimizer.into(),
        backend: problem.backend.name().into(),
        params: problem.assemble(&out.x),
        objective: out.value,
        iterations: out.iterations,
        evaluations: out.evaluations,
        converged: out.converged,
        wall_clock_s,
        trace: out.trace,
        final_values: out.final_values,
    }
}

/// Nelder-Mead over the free parameters from `initial`.
pub fn nelder_mead(
    problem: &CalibrationProblem,
    initial: &HestonParams,
    config: &NelderMeadConfig,
) -> Result<CalibrationResult> {
    problem.validate()?;
    let a = initial.to_array();
    for i in (0..5).filter(|&i| problem.free[i]) {
        if !problem.in_bounds_at(i, a[i]) {
            return Err(Error::InvalidParameter {
                name: PARAM_NAMES[i],
                value: a[i],
                reason: "initial guess lies outside the bounds",
            });
        }
    }
    let x0 = problem.free_values(initial);
    let start = Instant::now();
    let out = nelder_mead::minimize(scalar_objective(problem), &x0, config)?;
    let wall = start.elapsed().as_secs_f64();
    Ok(finish(problem, "nelder-mead", out, wall))
}

/// Differential evolution over the free parameters inside the bounds.
pub fn differential_evolution(problem: &CalibrationProblem, config: &DeConfig) -> Result<CalibrationResult> {
    problem.validate()?;
    let start = Instant::now();
    let out = de::minimize(scalar_objective(problem), &problem.free_bounds(), config)?;
    let wall = start.elapsed().as_secs_f64();
    Ok(finish(problem, "differential-evolution", out, wall))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub tau: f64,
    pub strike: f64,
    pub market: f64,
    pub model: f64,
}

/// Analytic re-pricing of every quote at `params`.
pub fn price_comparison(quotes: &QuoteSet, params: &HestonParams, quad: &QuadratureConfig) -> Result<Vec<PriceRow>> {
    let backend = Backend::Analytic(*quad);
    quotes
        .quotes
        .iter()
        .map(|q| {
            Ok(PriceRow {
                tau: q.tau,
                strike: q.strike,
                market: q.price,
                model: model_price(q, quotes.spot, params, &backend)?,
            })
        })
        .collect()
}

pub fn mean_abs_error(rows: &[PriceRow]) -> f64 {
    rows.iter().map(|r| (r.model - r.market).abs()).sum::<f64>() / rows.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendComparison {
    pub label_a: String,
    pub label_b: String,
    pub params_a: HestonParams,
    pub params_b: HestonParams,
    /// `|a - b|` in [`PARAM_NAMES`] order.
    pub param_abs_diff: [f64; 5],
    /// Wall clock of `a` divided by wall clock of `b`.
    pub wall_clock_ratio: f64,
    /// Per quote: `(tau, strike, market, model at a, model at b)`.
    pub prices: Vec<(f64, f64, f64, f64, f64)>,
    pub mae_a: f64,
    pub mae_b: f64,
}

/// Re-prices both optima with the analytic pricer and compares them.
pub fn compare_backends(
    problem: &CalibrationProblem,
    a: &CalibrationResult,
    b: &CalibrationResult,
    quad: &QuadratureConfig,
) -> Result<BackendComparison> {
    let ra = price_comparison(&problem.quotes, &a.params, quad)?;
    let rb = price_comparison(&problem.quotes, &b.params, quad)?;
    let (pa, pb) = (a.params.to_array(), b.params.to_array());
    Ok(BackendComparison {
        label_a: a.backend.clone(),
        label_b: b.backend.clone(),
        params_a: a.params,
        params_b: b.params,
        param_abs_diff: std::array::from_fn(|i| (pa[i] - pb[i]).abs()),
        wall_clock_ratio: if b.wall_clock_s > 0.0 {
            a.wall_clock_s / b.wall_clock_s
        } else {
            f64::INFINITY
        },
        prices: ra
            .iter()
            .zip(&rb)
            .map(|(x, y)| (x.tau, x.strike, x.market, x.model, y.model))
            .collect(),
        mae_a: mean_abs_error(&ra),
        mae_b: mean_abs_error(&rb),
    })
}

impl BackendComparison {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tau,strike,market,model_{},model_{}", self.label_a, self.label_b)?;
        for (t, k, m, a, b) in &self.prices {
            writeln!(out, "{t:.16e},{k},{m:.16e},{a:.16e},{b:.16e}")?;
        }
        Ok(())
    }
}

impl fmt::Display for BackendComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:>14} {:>14} {:>14}",
            "param", self.label_a, self.label_b, "abs diff"
        )?;
        let (pa, pb) = (self.params_a.to_array(), self.params_b.to_array());
        for i in 0..5 {
            writeln!(
                f,
                "{:<8} {:>14.6e} {:>14.6e} {:>14.6e}",
                PARAM_NAMES[i], pa[i], pb[i], self.param_abs_diff[i]
            )?;
        }
        writeln!(f, "mean abs price error ({}): {:.6}", self.label_a, self.mae_a)?;
        writeln!(f, "mean abs price error ({}): {:.6}", self.label_b, self.mae_b)?;
        write!(
            f,
            "wall clock ratio {}/{}: {:.2}",
            self.label_a, self.label_b, self.wall_clock_ratio
        )
    }
}

pub fn write_trace<W: Write>(mut out: W, trace: &[TraceRow]) -> Result<()> {
    writeln!(out, "iter,best_objective,elapsed_s")?;
    for t in trace {
        writeln!(out, "{},{:.16e},{:.6}", t.iter, t.best_objective, t.elapsed_s)?;
    }
    Ok(())
}

/// Two-column `field,value` report.
pub fn write_result<W: Write>(mut out: W, r: &CalibrationResult) -> Result<()> {
    writeln!(out, "field,value")?;
    writeln!(out, "optimizer,{}", r.optimizer)?;
    writeln!(out, "backend,{}", r.backend)?;
    for (name, v) in PARAM_NAMES.iter().zip(r.params.to_array()) {
        writeln!(out, "{name},{v:.16e}")?;
    }
    writeln!(out, "objective,{:.16e}", r.objective)?;
    writeln!(out, "iterations,{}", r.iterations)?;
    writeln!(out, "evaluations,{}", r.evaluations)?;
    writeln!(out, "converged,{}", r.converged)?;
    writeln!(out, "wall_clock_s,{:.6}", r.wall_clock_s)?;
    Ok(())
}

pub fn write_prices<W: Write>(mut out: W, rows: &[PriceRow]) -> Result<()> {
    writeln!(out, "tau,strike,market,model")?;
    for r in rows {
        writeln!(out, "{:.16e},{},{:.16e},{:.16e}", r.tau, r.strike, r.market, r.model)?;
    }
    Ok(())
}

impl fmt::Display for CalibrationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({} backend)", self.optimizer, self.backend)?;
        for (name, v) in PARAM_NAMES.iter().zip(self.params.to_array()) {
            writeln!(f, "  {name:<6} {v:.6e}")?;
        }
        writeln!(f, "  objective   {:.6e}", self.objective)?;
        writeln!(
            f,
            "  iterations  {} ({} evaluations, converged: {})",
            self.iterations, self.evaluations, self.converged
        )?;
        write!(f, "  wall clock  {:.3} s", self.wall_clock_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_quote(price: f64) -> QuoteSet {
        QuoteSet {
            spot: 100.0,
            quotes: vec![Quote {
                tau: 1.0,
                strike: 100.0,
                price,
                rate: 0.02,
            }],
        }
    }

    fn params() -> HestonParams {
        HestonParams::new(1.5, 0.2, 0.3, -0.5, 0.1).unwrap()
    }

    #[test]
    fn objective_is_absolute_error_for_one_quote() {
        let backend = Backend::Analytic(QuadratureConfig::default());
        let exact = model_price(&single_quote(1.0).quotes[0], 100.0, &params(), &backend).unwrap();
        let problem = CalibrationProblem::five(single_quote(exact + 0.37), backend).unwrap();
        assert!((objective(&params(), &problem).unwrap() - 0.37).abs() < 1e-9);
    }

    #[test]
    fn penalty_grows_with_distance() {
        let problem =
            CalibrationProblem::five(single_quote(10.0), Backend::Analytic(QuadratureConfig::default())).unwrap();
        let mut p = params();
        p.kappa = 3.5;
        assert_eq!(objective(&p, &problem).unwrap(), PENALTY * 1.5);
        p.kappa = 4.0;
        assert_eq!(objective(&p, &problem).unwrap(), PENALTY * 2.0);
    }

    #[test]
    fn three_param_mode_masks() {
        let problem =
            CalibrationProblem::three(single_quote(10.0), Backend::Analytic(QuadratureConfig::default()), 0.04)
                .unwrap();
        assert_eq!(problem.n_free(), 3);
        let p = problem.assemble(&[0.1, 0.5, -0.2]);
        assert_eq!(p.to_array(), [THREE_PARAM_KAPPA, 0.1, 0.5, -0.2, 0.04]);
        assert_eq!(problem.free_values(&p), vec![0.1, 0.5, -0.2]);
    }

    #[test]
    fn problem_validation() {
        let b = Backend::Analytic(QuadratureConfig::default());
        let mut p = CalibrationProblem::five(single_quote(10.0), b.clone()).unwrap();
        p.free = [false; 5];
        assert!(p.validate().is_err());
        assert!(CalibrationProblem::three(single_quote(10.0), b.clone(), 2.0).is_err());
        assert!(CalibrationProblem::five(single_quote(-1.0), b).is_err());
    }

    #[test]
    fn atm_iv_squares() {
        assert!((fix_v0_from_atm_iv(0.0177) - 3.13e-4).abs() < 5e-7);
        assert_eq!(fix_v0_from_atm_iv(0.0), 0.0);
        assert!((fix_v0_from_atm_iv(0.2) - 0.04).abs() < 1e-16);
    }

    #[test]
    fn initial_guess_outside_bounds_is_rejected() {
        let problem =
            CalibrationProblem::five(single_quote(10.0), Backend::Analytic(QuadratureConfig::default())).unwrap();
        let mut p = params();
        p.sigma = 2.5;
        assert!(matches!(
            nelder_mead(&problem, &p, &NelderMeadConfig::default()),
            Err(Error::InvalidParameter { name: "sigma", .. })
        ));
    }
}
