//! Heston characteristic function in the Gatheral-Taleb ("little trap") form,
//! together with the exact partial derivatives of its exponents.
//!
//! `phi_tau(u) = exp(A(u) + v0 B(u))` with
//!
//! ```text
//! alpha = -u (u + i) / 2,   beta = kappa - i u sigma rho,   gamma = sigma^2 / 2
//! d = sqrt(beta^2 - 4 alpha gamma),   g = (beta - d) / (beta + d)
//! A = kappa theta / sigma^2 [ (beta - d) tau - 2 ln((g e^{-d tau} - 1) / (g - 1)) ]
//! B = (beta - d) / sigma^2 (1 - e^{-d tau}) / (1 - g e^{-d tau})
//! ```
//!
//! `d` is taken on the principal branch (`Re d >= 0`) so that `e^{-d tau}`
//! stays bounded.

use num_complex::Complex64;

use super::params::HestonParams;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Below this `|d|` the exponents are evaluated through their `d -> 0` limit.
const SMALL_D: f64 = 1e-10;
/// Degeneracy threshold for `1 - g e^{-d tau}`.
const DEGENERATE: f64 = 1e-14;

/// Every intermediate of one characteristic-function evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CharFnTerms {
    pub u: Complex64,
    pub tau: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: f64,
    pub d: Complex64,
    /// `beta - d`, formed as `4 alpha gamma / (beta + d)` to avoid cancellation.
    pub beta_minus_d: Complex64,
    pub g: Complex64,
    /// `e^{-d tau}`
    pub e: Complex64,
    /// `ln((g e - 1) / (g - 1))`
    pub log_ratio: Complex64,
    pub a: Complex64,
    pub b: Complex64,
    pub phi: Complex64,
    /// Set when the `d -> 0` limit was used; derivatives are unavailable then.
    pub limiting: bool,
}

/// Evaluates `phi_tau(u)` and its intermediates.
pub fn char_fn(u: Complex64, params: &HestonParams, tau: f64) -> Result<CharFnTerms> {
    let HestonParams {
        kappa,
        theta,
        sigma,
        rho,
        v0,
    } = *params;
    let s2 = sigma * sigma;
    let alpha = -0.5 * u * (u + I);
    let beta = kappa - I * u * sigma * rho;
    let gamma = 0.5 * s2;
    let d = (beta * beta - 4.0 * alpha * gamma).sqrt();
    let scale = kappa * theta / s2;

    // Re(beta + d) >= kappa > 0, so this quotient never cancels.
    let beta_minus_d = 4.0 * alpha * gamma / (beta + d);

    let (g, e, log_ratio, a, b, limiting) = if d.norm() < SMALL_D {
        // d -> 0: (1 - e)/(1 - g e) -> beta tau / (beta tau + 2),
        // (g e - 1)/(g - 1) -> 1 + beta tau / 2.
        let bt = beta * tau;
        let log_ratio = (ONE + 0.5 * bt).ln();
        let a = scale * (bt - 2.0 * log_ratio);
        let b = beta / s2 * bt / (bt + 2.0);
        (ONE, ONE, log_ratio, a, b, true)
    } else {
        let g = beta_minus_d / (beta + d);
        let e = (-d * tau).exp();
        let denom = ONE - g * e;
        if denom.norm() < DEGENERATE {
            return Err(Error::Domain {
                what: "characteristic function",
                detail: format!("1 - g e^(-d tau) vanishes at u = {u}"),
            });
        }
        let log_ratio = ln_1p(g * (e - 1.0) / (g - 1.0));
        let a = scale * (beta_minus_d * tau - 2.0 * log_ratio);
        let b = beta_minus_d / s2 * (ONE - e) / denom;
        (g, e, log_ratio, a, b, false)
    };

    let phi = (a + v0 * b).exp();
    let terms = CharFnTerms {
        u,
        tau,
        alpha,
        beta,
        gamma,
        d,
        beta_minus_d,
        g,
        e,
        log_ratio,
        a,
        b,
        phi,
        limiting,
    };
    terms.check_finite()?;
    Ok(terms)
}

/// `ln(1 + z)`, accurate for small `|z|`.
fn ln_1p(z: Complex64) -> Complex64 {
    let w = ONE + z;
    let dw = w - ONE;
    if dw == Complex64::new(0.0, 0.0) {
        z
    } else if z.norm() < 0.5 {
        w.ln() * (z / dw)
    } else {
        w.ln()
    }
}

impl CharFnTerms {
    fn check_finite(&self) -> Result<()> {
        let named = [
            ("d", self.d),
            ("g", self.g),
            ("exp(-d tau)", self.e),
            ("log ratio", self.log_ratio),
            ("A", self.a),
            ("B", self.b),
            ("phi", self.phi),
        ];
        for (name, z) in named {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Domain {
                    what: "characteristic function",
                    detail: format!("non-finite {name} = {z} at u = {}", self.u),
                });
            }
        }
        Ok(())
    }

    /// Derivatives `(dA, dB)` with respect to one model parameter, given the
    /// parameter's direct effect on `beta`, on `gamma`, on `kappa theta / sigma^2`
    /// and on `1 / sigma^2`.
    fn param_derivative(
        &self,
        params: &HestonParams,
        d_beta: Complex64,
        d_gamma: f64,
        d_scale: f64,
        d_inv_s2: f64,
    ) -> (Complex64, Complex64) {
        let CharFnTerms {
            tau,
            alpha,
            beta,
            gamma,
            d,
            beta_minus_d,
            g,
            e,
            log_ratio,
            ..
        } = *self;
        let s2 = params.sigma * params.sigma;
        let scale = params.kappa * params.theta / s2;

        let d_d = (beta * d_beta - 2.0 * alpha * d_gamma) / d;
        let bpd = beta + d;
        let d_bmd = 4.0 * alpha * (d_gamma - gamma * (d_beta + d_d) / bpd) / bpd;
        let d_g = (d_bmd - beta_minus_d * (d_beta + d_d) / bpd) / bpd;
        let d_e = -tau * d_d * e;
        let ge = g * e;
        let d_ge = d_g * e + g * d_e;
        let d_log = d_ge / (ge - 1.0) - d_g / (g - 1.0);
        let one_m_ge = ONE - ge;
        let q = (ONE - e) / one_m_ge;
        let d_q = (-d_e * one_m_ge + (ONE - e) * d_ge) / (one_m_ge * one_m_ge);

        let bracket = beta_minus_d * tau - 2.0 * log_ratio;
        let d_a = d_scale * bracket + scale * (d_bmd * tau - 2.0 * d_log);
        let d_b = d_bmd / s2 * q + beta_minus_d * d_inv_s2 * q + beta_minus_d / s2 * d_q;
        (d_a, d_b)
    }

    fn require_exact(&self, what: &'static str) -> Result<()> {
        if self.limiting {
            Err(Error::Domain {
                what,
                detail: format!("derivative unavailable in the d -> 0 limit at u = {}", self.u),
            })
        } else {
            Ok(())
        }
    }

    /// `(dA/dkappa, dB/dkappa)`.
    pub fn d_kappa(&self, p: &HestonParams) -> Result<(Complex64, Complex64)> {
        self.require_exact("d/dkappa")?;
        let s2 = p.sigma * p.sigma;
        Ok(self.param_derivative(p, ONE, 0.0, p.theta / s2, 0.0))
    }

    /// `(dA/dtheta, dB/dtheta) = (A / theta, 0)`, evaluated without the division.
    pub fn d_theta(&self, p: &HestonParams) -> (Complex64, Complex64) {
        let s2 = p.sigma * p.sigma;
        let da = p.kappa / s2 * (self.beta_minus_d * self.tau - 2.0 * self.log_ratio);
        (da, Complex64::new(0.0, 0.0))
    }

    /// `(dA/dsigma, dB/dsigma)`.
    pub fn d_sigma(&self, p: &HestonParams) -> Result<(Complex64, Complex64)> {
        self.require_exact("d/dsigma")?;
        let s = p.sigma;
        let s3 = s * s * s;
        Ok(self.param_derivative(p, -I * self.u * p.rho, s, -2.0 * p.kappa * p.theta / s3, -2.0 / s3))
    }

    /// `(dA/drho, dB/drho)`.
    pub fn d_rho(&self, p: &HestonParams) -> Result<(Complex64, Complex64)> {
        self.require_exact("d/drho")?;
        Ok(self.param_derivative(p, -I * self.u * p.sigma, 0.0, 0.0, 0.0))
    }

    /// `(dA/dtau, dB/dtau)`.
    pub fn d_tau(&self, p: &HestonParams) -> Result<(Complex64, Complex64)> {
        self.require_exact("d/dtau")?;
        let s2 = p.sigma * p.sigma;
        let scale = p.kappa * p.theta / s2;
        let CharFnTerms {
            d, beta_minus_d, g, e, ..
        } = *self;
        let d_e = -d * e;
        let ge = g * e;
        let one_m_ge = ONE - ge;
        let d_log = g * d_e / (ge - 1.0);
        let d_q = (-d_e * one_m_ge + (ONE - e) * g * d_e) / (one_m_ge * one_m_ge);
        let d_a = scale * (beta_minus_d - 2.0 * d_log);
        let d_b = beta_minus_d / s2 * d_q;
        Ok((d_a, d_b))
    }

    /// `d phi / d tau`.
    pub fn dphi_dtau(&self, p: &HestonParams) -> Result<Complex64> {
        let (da, db) = self.d_tau(p)?;
        Ok(self.phi * (da + p.v0 * db))
    }
}
