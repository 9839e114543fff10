use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calibrate::{nelder_mead_minimize, NelderMeadConfig};
use crate::error::{Error, Result};

/// Starting decay pairs `(lambda1, lambda2)` for the outer search.
pub const LAMBDA_STARTS: [(f64, f64); 9] = [
    (0.5, 1.0),
    (0.5, 5.0),
    (0.5, 10.0),
    (2.0, 1.0),
    (2.0, 5.0),
    (2.0, 10.0),
    (5.0, 1.0),
    (5.0, 5.0),
    (5.0, 10.0),
];

/// Admissible range of each decay parameter, in years.
pub const LAMBDA_BOUNDS: (f64, f64) = (0.05, 30.0);

/// `(1 - e^{-x}) / x`, continuous at zero.
fn slope(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Loadings of `(beta0, beta1, beta2, beta3)` at maturity `tau`.
fn loadings(tau: f64, l1: f64, l2: f64) -> [f64; 4] {
    let (x1, x2) = (tau / l1, tau / l2);
    let s1 = slope(x1);
    let s2 = slope(x2);
    [1.0, s1, s1 - (-x1).exp(), s2 - (-x2).exp()]
}

/// Nelson-Siegel-Svensson zero-rate curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldCurve {
    pub beta: [f64; 4],
    pub lambda: [f64; 2],
    /// Points the curve was fitted on, `(tau, rate)` in decimals.
    pub points: Vec<(f64, f64)>,
    /// Root-mean-square fit residual in decimals.
    pub rms_residual: f64,
}

impl YieldCurve {
    pub fn new(beta: [f64; 4], lambda: [f64; 2]) -> Result<Self> {
        if !(lambda[0] > 0.0 && lambda[1] > 0.0 && lambda.iter().all(|l| l.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "decay parameters must be positive, got {lambda:?}"
            )));
        }
        Ok(Self {
            beta,
            lambda,
            points: Vec::new(),
            rms_residual: 0.0,
        })
    }

    /// Constant curve.
    pub fn flat(rate: f64) -> Self {
        Self {
            beta: [rate, 0.0, 0.0, 0.0],
            lambda: [1.0, 1.0],
            points: Vec::new(),
            rms_residual: 0.0,
        }
    }

    /// Rate at maturity `tau` (years). `tau = 0` gives the short-rate limit.
    pub fn rate_at(&self, tau: f64) -> f64 {
        let l = loadings(tau.max(0.0), self.lambda[0], self.lambda[1]);
        l.iter().zip(&self.beta).map(|(a, b)| a * b).sum()
    }

    /// Six parameters on one line, then the residual.
    pub fn write_record<W: Write>(&self, mut out: W) -> Result<()> {
        let [b0, b1, b2, b3] = self.beta;
        let [l1, l2] = self.lambda;
        writeln!(out, "{b0:.16e} {b1:.16e} {b2:.16e} {b3:.16e} {l1:.16e} {l2:.16e}")?;
        writeln!(out, "rms_residual {:.16e}", self.rms_residual)?;
        Ok(())
    }

    pub fn read_record<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
            Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('#') => None,
            other => Some((i + 1, other)),
        });
        let (line, first) = lines.next().ok_or_else(|| Error::parse(1, "empty curve record"))?;
        let nums = first?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::parse(line, format!("{t}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != 6 {
            return Err(Error::parse(line, format!("expected 6 numbers, found {}", nums.len())));
        }
        let mut curve = Self::new([nums[0], nums[1], nums[2], nums[3]], [nums[4], nums[5]])?;
        if let Some((line, second)) = lines.next() {
            let second = second?;
            let value = second
                .strip_prefix("rms_residual")
                .ok_or_else(|| Error::parse(line, "expected `rms_residual <value>`"))?;
            curve.rms_residual = value
                .trim()
                .parse()
                .map_err(|e| Error::parse(line, format!("bad residual: {e}")))?;
        }
        Ok(curve)
    }
}

/// Least-squares betas for fixed decays and the resulting sum of squares.
fn inner_fit(points: &[(f64, f64)], l1: f64, l2: f64) -> Option<([f64; 4], f64)> {
    let n = points.len();
    let a = DMatrix::from_fn(n, 4, |i, j| loadings(points[i].0, l1, l2)[j]);
    let b = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12).ok()?;
    let resid = &a * &x - &b;
    let beta = [x[0], x[1], x[2], x[3]];
    let ss = resid.norm_squared();
    (ss.is_finite() && beta.iter().all(|v| v.is_finite())).then_some((beta, ss))
}

/// Fits the curve to `(tau, rate)` points given in decimals.
///
/// The betas are linear given the decays and are solved exactly; the decays
/// are searched in log space from each pair in [`LAMBDA_STARTS`], within
/// [`LAMBDA_BOUNDS`].
pub fn fit_nss(points: &[(f64, f64)]) -> Result<YieldCurve> {
    if points.len() < 6 {
        return Err(Error::InvalidArgument(format!(
            "need at least 6 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|&(t, r)| !(t > 0.0 && t.is_finite() && r.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "maturities must be positive and rates finite".into(),
        ));
    }
    let (lo, hi) = (LAMBDA_BOUNDS.0.ln(), LAMBDA_BOUNDS.1.ln());
    let outer = |z: &[f64]| {
        let excess = z.iter().map(|v| (lo - v).max(v - hi).max(0.0).powi(2)).sum::<f64>();
        if excess > 0.0 {
            return 1e6 * (1.0 + excess.sqrt());
        }
        inner_fit(points, z[0].exp(), z[1].exp()).map_or(f64::INFINITY, |f| f.1)
    };
    let config = NelderMeadConfig {
        max_iter: 2000,
        tol: 1e-14,
        ..Default::default()
    };

    let mut best: Option<([f64; 4], [f64; 2], f64)> = None;
    for (l1, l2) in LAMBDA_STARTS {
        let out = match nelder_mead_minimize(outer, &[l1.ln(), l2.ln()], &config) {
            Ok(o) => o,
            Err(e) => {
                log::debug!("start ({l1}, {l2}) failed: {e}");
                continue;
            }
        };
        let lambda = [out.x[0].exp(), out.x[1].exp()];
        if !lambda.iter().all(|l| (LAMBDA_BOUNDS.0..=LAMBDA_BOUNDS.1).contains(l)) {
            continue;
        }
        if let Some((beta, ss)) = inner_fit(points, lambda[0], lambda[1]) {
            if best.as_ref().is_none_or(|b| ss < b.2) {
                best = Some((beta, lambda, ss));
            }
        }
    }
    let (beta, lambda, ss) = best.ok_or_else(|| Error::Optimizer("yield-curve fit failed from every start".into()))?;
    Ok(YieldCurve {
        beta,
        lambda,
        points: points.to_vec(),
        rms_residual: (ss / points.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_points_give_flat_curve() {
        let pts: Vec<_> = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0]
            .iter()
            .map(|&t| (t, 0.03))
            .collect();
        let c = fit_nss(&pts).unwrap();
        for t in [0.01, 0.3, 1.0, 7.0, 25.0, 40.0] {
            assert!((c.rate_at(t) - 0.03).abs() < 1e-6, "{t}: {}", c.rate_at(t));
        }
    }

    #[test]
    fn short_end_limit() {
        let c = YieldCurve::new([0.03, -0.01, 0.02, 0.01], [1.5, 4.0]).unwrap();
        assert!((c.rate_at(0.0) - 0.02).abs() < 1e-15);
        assert!((c.rate_at(1e-12) - c.rate_at(0.0)).abs() < 1e-13);
    }

    #[test]
    fn record_round_trip() {
        let mut c = YieldCurve::new([0.03, -0.01, 0.02, 0.01], [1.5, 4.0]).unwrap();
        c.rms_residual = 1.25e-4;
        let mut buf = Vec::new();
        c.write_record(&mut buf).unwrap();
        let back = YieldCurve::read_record(buf.as_slice()).unwrap();
        assert_eq!(back.beta, c.beta);
        assert_eq!(back.lambda, c.lambda);
        assert_eq!(back.rms_residual, c.rms_residual);
    }

    #[test]
    fn too_few_points() {
        let pts = [(1.0, 0.01); 5];
        assert!(fit_nss(&pts).is_err());
    }
}
