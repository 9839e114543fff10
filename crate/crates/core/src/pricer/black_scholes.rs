//! Black-Scholes reference prices in normalised forward units.

use statrs::distribution::{ContinuousCDF, Normal};

fn norm_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// `e^{r tau} P / K` for a Black-Scholes put with volatility `vol`.
pub fn bs_normalised_put(log_forward: f64, tau: f64, vol: f64) -> f64 {
    let intrinsic = (1.0 - log_forward.exp()).max(0.0);
    if vol <= 0.0 || tau <= 0.0 {
        return intrinsic;
    }
    let sd = vol * tau.sqrt();
    let d1 = (log_forward + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    norm_cdf(-d2) - log_forward.exp() * norm_cdf(-d1)
}

/// Currency put price.
pub fn bs_put(spot: f64, strike: f64, tau: f64, r: f64, vol: f64) -> f64 {
    let f = (spot / strike).ln() + r * tau;
    strike * (-r * tau).exp() * bs_normalised_put(f, tau, vol)
}

/// Black-Scholes implied volatility of a normalised forward put, by bisection.
pub fn implied_vol_normalised_put(log_forward: f64, tau: f64, price: f64) -> Option<f64> {
    let intrinsic = (1.0 - log_forward.exp()).max(0.0);
    if !(price > intrinsic && price < 1.0) {
        return None;
    }
    let (mut lo, mut hi) = (1e-8, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bs_normalised_put(log_forward, tau, mid) > price {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}
