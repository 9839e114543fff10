//! The demo's operations as plain Rust, so they run and test off the browser.

use heston_dml::error::Result;
use heston_dml::marketdata::{fit_nss, read_par_yields_percent, YieldCurve, SAMPLE_PAR_YIELDS_PCT};
use heston_dml::pricer::black_scholes::implied_vol_normalised_put;
use heston_dml::pricer::{normalised_forward_put, HestonParams, MarketPoint, QuadratureConfig};
use heston_dml::sensitivities::price_and_gradient;

/// `[kappa, theta, sigma, rho, v0]`.
pub type ParamArray = [f64; 5];

fn params(p: ParamArray) -> Result<HestonParams> {
    HestonParams::new(p[0], p[1], p[2], p[3], p[4])
}

/// Normalised put followed by its eight sensitivities in input order
/// (m, tau, r, kappa, v0, theta, sigma, rho).
pub fn price_and_greeks(p: ParamArray, m: f64, tau: f64, r: f64) -> Result<[f64; 9]> {
    let point = MarketPoint::new(m, tau, r)?;
    let pg = price_and_gradient(&point, &params(p)?, &QuadratureConfig::default())?;
    let mut out = [pg.price; 9];
    out[1..].copy_from_slice(&pg.gradient.to_input_order());
    Ok(out)
}

/// Black-Scholes implied volatility of the model put on `n` evenly spaced
/// log-moneyness values. `None` where the price admits no volatility.
pub fn smile(p: ParamArray, tau: f64, r: f64, m_lo: f64, m_hi: f64, n: usize) -> Result<Vec<(f64, Option<f64>)>> {
    let params = params(p)?;
    let quad = QuadratureConfig::default();
    let step = if n > 1 { (m_hi - m_lo) / (n - 1) as f64 } else { 0.0 };
    (0..n)
        .map(|i| {
            let point = MarketPoint::new(m_lo + step * i as f64, tau, r)?;
            let price = normalised_forward_put(&point, &params, &quad)?;
            Ok((point.m, implied_vol_normalised_put(point.log_forward(), tau, price)))
        })
        .collect()
}

pub struct CurveFit {
    pub curve: YieldCurve,
    /// `(tau, rate)` on an even grid over the fitted maturities, in decimals.
    pub grid: Vec<(f64, f64)>,
}

/// Fits a Nelson-Siegel-Svensson curve to `maturity_years,rate_percent` text.
pub fn fit_par_yields(text: &str, n_grid: usize) -> Result<CurveFit> {
    let points = read_par_yields_percent(text.as_bytes())?;
    let curve = fit_nss(&points)?;
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let n = n_grid.max(2);
    let grid = (0..n)
        .map(|i| {
            let t = hi * (i as f64 + 1.0) / n as f64;
            (t, curve.rate_at(t))
        })
        .collect();
    Ok(CurveFit { curve, grid })
}

/// The built-in par-yield sample in the input format of [`fit_par_yields`].
pub fn sample_par_yields_text() -> String {
    let mut s = String::from("maturity_years,rate_percent\n");
    for (t, r) in SAMPLE_PAR_YIELDS_PCT {
        s.push_str(&format!("{t},{r}\n"));
    }
    s
}
