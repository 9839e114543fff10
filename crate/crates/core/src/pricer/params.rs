use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest vol-of-variance the semi-analytic pricer accepts.
pub const SIGMA_FLOOR: f64 = 1e-4;

/// The five Heston model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    /// Mean-reversion speed of the variance.
    pub kappa: f64,
    /// Long-term mean variance.
    pub theta: f64,
    /// Volatility of the variance.
    pub sigma: f64,
    /// Spot/variance correlation.
    pub rho: f64,
    /// Initial variance.
    pub v0: f64,
}

impl HestonParams {
    pub fn new(kappa: f64, theta: f64, sigma: f64, rho: f64, v0: f64) -> Result<Self> {
        let p = Self {
            kappa,
            theta,
            sigma,
            rho,
            v0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name, value, reason| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, value, reason })
            }
        };
        check(
            self.kappa.is_finite() && self.kappa > 0.0,
            "kappa",
            self.kappa,
            "must be > 0",
        )?;
        check(
            self.theta.is_finite() && self.theta >= 0.0,
            "theta",
            self.theta,
            "must be >= 0",
        )?;
        check(
            self.sigma.is_finite() && self.sigma > 0.0,
            "sigma",
            self.sigma,
            "must be > 0",
        )?;
        check(
            self.rho.is_finite() && self.rho > -1.0 && self.rho < 1.0,
            "rho",
            self.rho,
            "must lie in (-1, 1)",
        )?;
        check(self.v0.is_finite() && self.v0 >= 0.0, "v0", self.v0, "must be >= 0")
    }

    /// Validation plus the sigma floor required by the semi-analytic pricer.
    pub fn validate_for_pricing(&self) -> Result<()> {
        self.validate()?;
        if self.sigma < SIGMA_FLOOR {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "must be >= 1e-4 for the semi-analytic pricer",
            });
        }
        Ok(())
    }

    /// `2 kappa theta > sigma^2`.
    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.theta > self.sigma * self.sigma
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.kappa, self.theta, self.sigma, self.rho, self.v0]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            kappa: a[0],
            theta: a[1],
            sigma: a[2],
            rho: a[3],
            v0: a[4],
        }
    }
}

/// Option/market coordinates of a quote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketPoint {
    /// Log-moneyness `ln(S/K)`.
    pub m: f64,
    /// Time to maturity in years.
    pub tau: f64,
    /// Continuously compounded risk-free rate.
    pub r: f64,
}

impl MarketPoint {
    pub fn new(m: f64, tau: f64, r: f64) -> Result<Self> {
        let p = Self { m, tau, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: self.tau,
                reason: "must be > 0",
            });
        }
        if !self.m.is_finite() {
            return Err(Error::InvalidParameter {
                name: "m",
                value: self.m,
                reason: "must be finite",
            });
        }
        if !self.r.is_finite() {
            return Err(Error::InvalidParameter {
                name: "r",
                value: self.r,
                reason: "must be finite",
            });
        }
        Ok(())
    }

    /// Log-moneyness forward `m + r tau`.
    pub fn log_forward(&self) -> f64 {
        self.m + self.r * self.tau
    }
}

/// Names of the eight model inputs in their canonical order.
pub const INPUT_NAMES: [&str; 8] = ["m", "tau", "r", "kappa", "v0", "theta", "sigma", "rho"];

/// Packs a point and parameters into the canonical input vector.
pub fn to_inputs(point: &MarketPoint, params: &HestonParams) -> [f64; 8] {
    [
        point.m,
        point.tau,
        point.r,
        params.kappa,
        params.v0,
        params.theta,
        params.sigma,
        params.rho,
    ]
}

/// Splits a canonical input vector. No validation is performed.
pub fn from_inputs(x: &[f64; 8]) -> (MarketPoint, HestonParams) {
    (
        MarketPoint {
            m: x[0],
            tau: x[1],
            r: x[2],
        },
        HestonParams {
            kappa: x[3],
            v0: x[4],
            theta: x[5],
            sigma: x[6],
            rho: x[7],
        },
    )
}

/// Settings of the adaptive quadrature used for every Fourier integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial truncation of the half-line.
    pub u_max: f64,
    /// Hard limit for tail extension beyond `u_max`.
    pub u_cap: f64,
    /// Subdivision budget per panel.
    pub max_intervals: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            u_max: 200.0,
            u_cap: 1e5,
            max_intervals: 4000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "abs_tol",
                value: self.abs_tol,
                reason: "must be > 0",
            });
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "rel_tol",
                value: self.rel_tol,
                reason: "must be >= 0",
            });
        }
        if !(self.u_max > 0.0 && self.u_cap >= self.u_max) {
            return Err(Error::InvalidParameter {
                name: "u_max",
                value: self.u_max,
                reason: "must be > 0 and not exceed u_cap",
            });
        }
        Ok(())
    }
}
