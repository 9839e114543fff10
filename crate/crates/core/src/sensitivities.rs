//! Closed-form partial derivatives of the normalised forward put with
//! respect to all eight inputs `(m, tau, r, kappa, v0, theta, sigma, rho)`.
//!
//! Each partial is a Fourier integral of the same shape as the price,
//!
//! ```text
//! dP^/dx = -1/pi int_0^inf Re[ e^{(iu+1/2)F} d/dx phi_tau(u - i/2) ] du / (u^2 + 1/4)
//! ```
//!
//! (plus the explicit `F`-dependence for `m`, `r` and `tau`). The
//! characteristic-function intermediates are evaluated once per node and
//! shared by all eight integrands.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricer::{
    char_fn, fourier_weight, from_inputs, normalised_forward_put, quadrature, shifted, to_inputs, HestonParams,
    MarketPoint, QuadratureConfig, INPUT_NAMES,
};

/// The eight partial derivatives of `P^`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Gradient8 {
    pub d_theta: f64,
    pub d_m: f64,
    pub d_v0: f64,
    pub d_r: f64,
    pub d_tau: f64,
    pub d_kappa: f64,
    pub d_rho: f64,
    pub d_sigma: f64,
}

impl Gradient8 {
    /// Entries in dataset input order `(m, tau, r, kappa, v0, theta, sigma, rho)`.
    pub fn to_input_order(&self) -> [f64; 8] {
        [
            self.d_m,
            self.d_tau,
            self.d_r,
            self.d_kappa,
            self.d_v0,
            self.d_theta,
            self.d_sigma,
            self.d_rho,
        ]
    }

    pub fn from_input_order(v: [f64; 8]) -> Self {
        Self {
            d_m: v[0],
            d_tau: v[1],
            d_r: v[2],
            d_kappa: v[3],
            d_v0: v[4],
            d_theta: v[5],
            d_sigma: v[6],
            d_rho: v[7],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_input_order().iter().all(|x| x.is_finite())
    }
}

/// Price and gradient from one shared quadrature pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceAndGradient {
    pub price: f64,
    pub gradient: Gradient8,
}

// Slots of the vector integrand.
const PRICE: usize = 0;
const M: usize = 1;
const THETA: usize = 2;
const V0: usize = 3;
const TAU: usize = 4;
const KAPPA: usize = 5;
const RHO: usize = 6;
const SIGMA: usize = 7;

/// Which derivative integrands a pass must carry.
#[derive(Clone, Copy)]
enum Want {
    All,
    One(usize),
}

fn integrand(u: f64, point: &MarketPoint, p: &HestonParams, want: Want) -> Result<([f64; 8], f64)> {
    let t = char_fn(shifted(u), p, point.tau)?;
    let w = fourier_weight(u, point.log_forward()) * t.phi;
    let denom = u * u + 0.25;
    let mut out = [0.0; 8];
    let mut peak = 1.0_f64;
    let mut put = |slot: usize, factor: Complex64, out: &mut [f64; 8]| {
        out[slot] = (w * factor).re / denom;
        peak = peak.max(factor.norm());
    };
    let needs = |slot| matches!(want, Want::All) || matches!(want, Want::One(s) if s == slot);

    put(PRICE, Complex64::new(1.0, 0.0), &mut out);
    if needs(M) {
        put(M, Complex64::new(0.5, u), &mut out);
    }
    if needs(THETA) {
        put(THETA, t.d_theta(p).0, &mut out);
    }
    if needs(V0) {
        put(V0, t.b, &mut out);
    }
    if needs(TAU) {
        let (da, db) = t.d_tau(p)?;
        put(TAU, da + p.v0 * db, &mut out);
    }
    if needs(KAPPA) {
        let (da, db) = t.d_kappa(p)?;
        put(KAPPA, da + p.v0 * db, &mut out);
    }
    if needs(RHO) {
        let (da, db) = t.d_rho(p)?;
        put(RHO, da + p.v0 * db, &mut out);
    }
    if needs(SIGMA) {
        let (da, db) = t.d_sigma(p)?;
        put(SIGMA, da + p.v0 * db, &mut out);
    }
    let envelope = (0.5 * point.log_forward()).exp() * t.phi.norm() * peak / denom;
    Ok((out, envelope))
}

fn integrate(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig, want: Want) -> Result<[f64; 8]> {
    point.validate()?;
    params.validate_for_pricing()?;
    quad.validate()?;
    quadrature::integrate_half_line(
        quad,
        |u| integrand(u, point, params, want).map(|(v, _)| v),
        |u| integrand(u, point, params, want).map(|(_, e)| e),
    )
}

fn assemble(point: &MarketPoint, raw: &[f64; 8]) -> PriceAndGradient {
    let s = -1.0 / PI;
    let d_m = s * raw[M];
    let gradient = Gradient8 {
        d_theta: s * raw[THETA],
        d_m,
        d_v0: s * raw[V0],
        d_r: point.tau * d_m,
        d_tau: point.r * d_m + s * raw[TAU],
        d_kappa: s * raw[KAPPA],
        d_rho: s * raw[RHO],
        d_sigma: s * raw[SIGMA],
    };
    PriceAndGradient {
        price: 1.0 + s * raw[PRICE],
        gradient,
    }
}

/// Price and all eight partials, sharing one adaptive quadrature pass.
pub fn price_and_gradient(
    point: &MarketPoint,
    params: &HestonParams,
    quad: &QuadratureConfig,
) -> Result<PriceAndGradient> {
    let raw = integrate(point, params, quad, Want::All)?;
    Ok(assemble(point, &raw))
}

/// All eight partials of `P^`.
pub fn full_gradient(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<Gradient8> {
    Ok(price_and_gradient(point, params, quad)?.gradient)
}

fn single(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig, slot: usize) -> Result<f64> {
    Ok(-integrate(point, params, quad, Want::One(slot))?[slot] / PI)
}

/// `dP^/dtheta`. Requires `theta > 0`; at `theta = 0` use finite differences.
pub fn grad_theta(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    if !(params.theta > 0.0) {
        return Err(Error::Domain {
            what: "dP/dtheta",
            detail: "closed form divides by theta; theta = 0 requires finite differences".into(),
        });
    }
    single(point, params, quad, THETA)
}

/// `dP^/dm`.
pub fn grad_m(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    single(point, params, quad, M)
}

/// `dP^/dv0`.
pub fn grad_v0(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    single(point, params, quad, V0)
}

/// `dP^/dr = tau dP^/dm`.
pub fn grad_r(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    Ok(point.tau * grad_m(point, params, quad)?)
}

/// `dP^/dtau = r dP^/dm - 1/pi int Re[e^{(iu+1/2)F} dphi/dtau] ...`.
pub fn grad_tau(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    let raw = integrate(point, params, quad, Want::All)?;
    Ok(assemble(point, &raw).gradient.d_tau)
}

/// `dP^/dkappa`.
pub fn grad_kappa(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    single(point, params, quad, KAPPA)
}

/// `dP^/drho`.
pub fn grad_rho(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    single(point, params, quad, RHO)
}

/// `dP^/dsigma`.
pub fn grad_sigma(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    single(point, params, quad, SIGMA)
}

/// Quadrature settings used by [`fd_gradient`]; tight enough that the
/// differencing noise stays well below the step-size error.
pub fn fd_quadrature() -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-14,
        max_intervals: 20_000,
        ..QuadratureConfig::default()
    }
}

/// Finite-difference gradient of `P^` with per-input step
/// `h = 1e-5 max(|x|, 0.01)`. Central where both neighbours are valid
/// inputs, one-sided otherwise.
pub fn fd_gradient(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<Gradient8> {
    let x = to_inputs(point, params);
    let price = |x: &[f64; 8]| -> Option<Result<f64>> {
        let (pt, p) = from_inputs(x);
        if pt.validate().is_err() || p.validate_for_pricing().is_err() {
            return None;
        }
        Some(normalised_forward_put(&pt, &p, quad))
    };
    let mut out = [0.0; 8];
    for i in 0..8 {
        let h = 1e-5 * x[i].abs().max(0.01);
        let mut up = x;
        up[i] += h;
        let mut dn = x;
        dn[i] -= h;
        out[i] = match (price(&up), price(&dn)) {
            (Some(a), Some(b)) => (a? - b?) / (2.0 * h),
            (Some(a), None) => {
                let mut up2 = x;
                up2[i] += 2.0 * h;
                let c = price(&x).expect("base point is valid")?;
                let a2 = price(&up2).expect("forward step is valid")?;
                (-3.0 * c + 4.0 * a? - a2) / (2.0 * h)
            }
            (None, Some(b)) => {
                let mut dn2 = x;
                dn2[i] -= 2.0 * h;
                let c = price(&x).expect("base point is valid")?;
                let b2 = price(&dn2).expect("backward step is valid")?;
                (3.0 * c - 4.0 * b? + b2) / (2.0 * h)
            }
            (None, None) => {
                return Err(Error::Domain {
                    what: "finite difference",
                    detail: format!("no valid neighbour for input {}", INPUT_NAMES[i]),
                })
            }
        };
    }
    Ok(Gradient8::from_input_order(out))
}
