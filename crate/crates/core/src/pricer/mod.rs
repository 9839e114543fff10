//! Semi-analytic valuation of European puts under Heston.
//!
//! Prices are expressed as the normalised forward put `P^ = e^{r tau} P / K`,
//! obtained from Lipton's single-integral representation
//!
//! ```text
//! P^ = 1 - 1/pi int_0^inf Re[ e^{(iu + 1/2) F} phi_tau(u - i/2) ] du / (u^2 + 1/4)
//! ```
//!
//! with `F = m + r tau` the log-moneyness forward.

pub mod black_scholes;
pub mod charfn;
pub mod mc;
pub mod params;
pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use black_scholes::{bs_normalised_put, bs_put};
pub use charfn::{char_fn, CharFnTerms};
pub use mc::{mc_forward_moment, mc_price, McEstimate};
pub use params::{from_inputs, to_inputs, HestonParams, MarketPoint, QuadratureConfig, INPUT_NAMES, SIGMA_FLOOR};

use crate::error::{Error, Result};

/// `u - i/2`, the shifted frequency at which the pricing integrand samples phi.
#[inline]
pub(crate) fn shifted(u: f64) -> Complex64 {
    Complex64::new(u, -0.5)
}

/// `e^{(iu + 1/2) F}`.
#[inline]
pub(crate) fn fourier_weight(u: f64, log_forward: f64) -> Complex64 {
    (Complex64::new(0.5, u) * log_forward).exp()
}

/// Modulus of the price integrand, used to bound the truncated tail.
pub(crate) fn price_envelope(u: f64, point: &MarketPoint, params: &HestonParams) -> Result<f64> {
    let t = char_fn(shifted(u), params, point.tau)?;
    Ok((0.5 * point.log_forward()).exp() * t.phi.norm() / (u * u + 0.25))
}

/// `int_0^inf Re[e^{(iu+1/2)F} phi(u - i/2)] du / (u^2 + 1/4)`.
pub(crate) fn lipton_integral(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    let f = point.log_forward();
    let integrand = |u: f64| -> Result<[f64; 1]> {
        let t = char_fn(shifted(u), params, point.tau)?;
        Ok([(fourier_weight(u, f) * t.phi).re / (u * u + 0.25)])
    };
    let [value] = quadrature::integrate_half_line(quad, integrand, |u| price_envelope(u, point, params))?;
    Ok(value)
}

fn check_inputs(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<()> {
    point.validate()?;
    params.validate_for_pricing()?;
    quad.validate()
}

/// Normalised forward put price `P^ = e^{r tau} P / K`.
pub fn normalised_forward_put(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    check_inputs(point, params, quad)?;
    Ok(1.0 - lipton_integral(point, params, quad)? / PI)
}

/// Normalised forward call from put-call parity: `C^ = P^ + e^F - 1`.
pub fn normalised_forward_call(point: &MarketPoint, params: &HestonParams, quad: &QuadratureConfig) -> Result<f64> {
    let put = normalised_forward_put(point, params, quad)?;
    Ok(put + point.log_forward().exp() - 1.0)
}

/// Normalised forward call straight from Lipton's call formula,
/// `C^ = e^F - 1/pi int ...`.
pub fn normalised_forward_call_direct(
    point: &MarketPoint,
    params: &HestonParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_inputs(point, params, quad)?;
    Ok(point.log_forward().exp() - lipton_integral(point, params, quad)? / PI)
}

/// Put price in currency: `K e^{-r tau} P^`.
pub fn put_price(point: &MarketPoint, params: &HestonParams, strike: f64, quad: &QuadratureConfig) -> Result<f64> {
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "strike",
            value: strike,
            reason: "must be > 0",
        });
    }
    let p_hat = normalised_forward_put(point, params, quad)?;
    Ok(discounted_strike(strike, point) * p_hat)
}

/// `K e^{-r tau}`.
pub fn discounted_strike(strike: f64, point: &MarketPoint) -> f64 {
    strike * (-point.r * point.tau).exp()
}

/// Black-Scholes volatility equivalent to Heston with vanishing vol-of-variance:
/// `sqrt(theta + (1 - e^{-kappa tau}) / (kappa tau) (v0 - theta))`.
pub fn bs_effective_vol(params: &HestonParams, tau: f64) -> f64 {
    let x = params.kappa * tau;
    // (1 - e^{-x}) / x, with its series near zero
    let avg = if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    };
    (params.theta + avg * (params.v0 - params.theta)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn reference() -> HestonParams {
        HestonParams::new(1.5, 0.2, 0.3, -0.5, 0.1).unwrap()
    }

    #[test]
    fn vanishing_spot_gives_unit_put() {
        // The put saturates at 1 - e^F (its lower bound), which is 1 - 4.6e-5 here.
        let point = MarketPoint::new(-10.0, 1.0, 0.02).unwrap();
        let p = normalised_forward_put(&point, &reference(), &quad()).unwrap();
        let floor = 1.0 - point.log_forward().exp();
        assert!((p - floor).abs() < 1e-9, "{p} vs {floor}");
        assert!((p - 1.0).abs() < 1e-4);
    }

    #[test]
    fn black_scholes_embedding() {
        let params = HestonParams::new(1.0, 0.04, 1e-4, 0.0, 0.04).unwrap();
        let point = MarketPoint::new(0.0, 1.0, 0.02).unwrap();
        let p = normalised_forward_put(&point, &params, &quad()).unwrap();
        let bs = bs_normalised_put(point.log_forward(), 1.0, 0.2);
        assert!((p - bs).abs() < 1e-5, "{p} vs {bs}");
    }

    #[test]
    fn put_price_formula() {
        // P^ = 0.5 fixed through the discounting helper.
        let point = MarketPoint::new(0.0, 1.0, 0.02).unwrap();
        assert!((discounted_strike(100.0, &point) * 0.5 - 49.009_933_665_337_76).abs() < 1e-10);
        assert_eq!(
            discounted_strike(100.0, &MarketPoint::new(0.0, 1.0, 0.0).unwrap()) * 0.0,
            0.0
        );
        assert!(put_price(&point, &reference(), -1.0, &quad()).is_err());
    }

    #[test]
    fn call_paths_agree() {
        let params = reference();
        for &(m, tau, r) in &[(0.0, 1.0, 0.02), (0.3, 0.2, 0.05), (-0.7, 5.0, 0.0)] {
            let point = MarketPoint::new(m, tau, r).unwrap();
            let parity = normalised_forward_call(&point, &params, &quad()).unwrap();
            let direct = normalised_forward_call_direct(&point, &params, &quad()).unwrap();
            assert!((parity - direct).abs() < 1e-9);
        }
        // At-the-money forward the call equals the put.
        let point = MarketPoint::new(-0.02, 1.0, 0.02).unwrap();
        let c = normalised_forward_call(&point, &params, &quad()).unwrap();
        let p = normalised_forward_put(&point, &params, &quad()).unwrap();
        assert!((c - p).abs() < 1e-14);
    }

    #[test]
    fn deep_itm_call() {
        let point = MarketPoint::new(10.0, 1.0, 0.02).unwrap();
        let c = normalised_forward_call(&point, &reference(), &quad()).unwrap();
        let fwd = point.log_forward().exp();
        assert!((c - (fwd - 1.0)).abs() < 1e-9 * fwd, "{c} vs {}", fwd - 1.0);
    }

    #[test]
    fn effective_vol() {
        let flat = HestonParams::new(3.0, 0.04, 0.5, -0.3, 0.04).unwrap();
        assert!((bs_effective_vol(&flat, 2.0) - 0.2).abs() < 1e-15);
        let slow = HestonParams::new(1e-12, 0.09, 0.5, -0.3, 0.01).unwrap();
        assert!((bs_effective_vol(&slow, 1.0) - 0.1).abs() < 1e-9);
        // kappa=2, theta=0.09, v0=0.01, tau=1 against a midpoint-rule average of v_t.
        let p = HestonParams::new(2.0, 0.09, 0.5, -0.3, 0.01).unwrap();
        let n = 200_000;
        let h = 1.0 / n as f64;
        let avg: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                0.09 + (-2.0 * t).exp() * (0.01 - 0.09)
            })
            .sum::<f64>()
            * h;
        assert!((bs_effective_vol(&p, 1.0) - avg.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn sigma_floor_enforced() {
        let p = HestonParams::new(1.0, 0.04, 5e-5, 0.0, 0.04).unwrap();
        let point = MarketPoint::new(0.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            normalised_forward_put(&point, &p, &quad()),
            Err(Error::InvalidParameter { name: "sigma", .. })
        ));
    }
}
