//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Results are returned as flat `Float64Array`s; the page unpacks them.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: heston_dml::error::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `[p_hat, d_m, d_tau, d_r, d_kappa, d_v0, d_theta, d_sigma, d_rho]`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn price_greeks(
    kappa: f64,
    theta: f64,
    sigma: f64,
    rho: f64,
    v0: f64,
    m: f64,
    tau: f64,
    r: f64,
) -> Result<Vec<f64>, JsError> {
    demo::price_and_greeks([kappa, theta, sigma, rho, v0], m, tau, r)
        .map(Vec::from)
        .map_err(js)
}

/// Pairs `m, iv`; `iv` is NaN where no volatility matches the price.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn implied_smile(
    kappa: f64,
    theta: f64,
    sigma: f64,
    rho: f64,
    v0: f64,
    tau: f64,
    r: f64,
    m_lo: f64,
    m_hi: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    let pts = demo::smile([kappa, theta, sigma, rho, v0], tau, r, m_lo, m_hi, n).map_err(js)?;
    Ok(pts
        .into_iter()
        .flat_map(|(m, iv)| [m, iv.unwrap_or(f64::NAN)])
        .collect())
}

/// `[b0, b1, b2, b3, l1, l2, rms]`, then the input points and the fitted
/// grid as `n_points, (tau, rate)*, (tau, rate)*`.
#[wasm_bindgen]
pub fn fit_curve(text: &str, n_grid: usize) -> Result<Vec<f64>, JsError> {
    let fit = demo::fit_par_yields(text, n_grid).map_err(js)?;
    let c = &fit.curve;
    let mut out = Vec::with_capacity(8 + 2 * (c.points.len() + fit.grid.len()));
    out.extend(c.beta);
    out.extend(c.lambda);
    out.push(c.rms_residual);
    out.push(c.points.len() as f64);
    out.extend(c.points.iter().chain(&fit.grid).flat_map(|&(t, r)| [t, r]));
    Ok(out)
}

#[wasm_bindgen]
pub fn sample_par_yields() -> String {
    demo::sample_par_yields_text()
}
