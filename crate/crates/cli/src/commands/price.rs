use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use heston_dml::pricer::{
    discounted_strike, normalised_forward_put, HestonParams, MarketPoint, QuadratureConfig, INPUT_NAMES,
};
use heston_dml::sensitivities::{fd_gradient, fd_quadrature, price_and_gradient};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::files;

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub v0: f64,
    /// Log-moneyness ln(S/K).
    #[arg(long, allow_negative_numbers = true)]
    pub m: f64,
    /// Maturity in years.
    #[arg(long)]
    pub tau: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub r: f64,
    /// Strike used for the currency price.
    #[arg(long, default_value_t = 100.0)]
    pub strike: f64,
    /// Quadrature tolerances (absolute and relative).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GreeksArgs {
    #[command(flatten)]
    pub point: PriceArgs,
    /// Add central finite differences alongside the closed forms.
    #[arg(long)]
    pub check_fd: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriceRun {
    pub params: HestonParams,
    pub point: MarketPoint,
    pub strike: f64,
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub check_fd: bool,
    pub csv: Option<PathBuf>,
}

impl PriceArgs {
    pub fn resolve(self, check_fd: bool) -> PriceRun {
        PriceRun {
            params: HestonParams {
                kappa: self.kappa,
                theta: self.theta,
                sigma: self.sigma,
                rho: self.rho,
                v0: self.v0,
            },
            point: MarketPoint {
                m: self.m,
                tau: self.tau,
                r: self.r,
            },
            strike: self.strike,
            quadrature: QuadratureConfig {
                abs_tol: self.tol,
                rel_tol: self.tol,
                ..Default::default()
            },
            check_fd,
            csv: self.csv,
        }
    }
}

impl PriceRun {
    pub fn price(&self) -> CliResult<Vec<PathBuf>> {
        let p_hat = normalised_forward_put(&self.point, &self.params, &self.quadrature)?;
        let k = self.strike;
        let rows = [
            ("p_hat", p_hat),
            ("put", discounted_strike(k, &self.point) * p_hat),
            ("spot", k * self.point.m.exp()),
            ("strike", k),
        ];
        println!("{:<8} {:>24}", "quantity", "value");
        for (name, v) in rows {
            println!("{name:<8} {v:>24.15e}");
        }
        let Some(path) = &self.csv else {
            return Ok(vec![]);
        };
        let mut out = files::create(path)?;
        writeln!(out, "quantity,value")?;
        for (name, v) in rows {
            writeln!(out, "{name},{v:.16e}")?;
        }
        out.flush()?;
        Ok(vec![path.clone()])
    }

    pub fn greeks(&self) -> CliResult<Vec<PathBuf>> {
        let pg = price_and_gradient(&self.point, &self.params, &self.quadrature)?;
        let analytic = pg.gradient.to_input_order();
        let fd = if self.check_fd {
            Some(fd_gradient(&self.point, &self.params, &fd_quadrature())?.to_input_order())
        } else {
            None
        };
        println!("p_hat = {:.15e}", pg.price);
        match fd {
            Some(_) => println!("{:<6} {:>24} {:>24} {:>11}", "input", "analytic", "fd", "rel_err"),
            None => println!("{:<6} {:>24}", "input", "analytic"),
        }
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        for j in 0..8 {
            match fd {
                Some(f) => println!(
                    "{:<6} {:>24.15e} {:>24.15e} {:>11.3e}",
                    INPUT_NAMES[j],
                    analytic[j],
                    f[j],
                    rel(analytic[j], f[j])
                ),
                None => println!("{:<6} {:>24.15e}", INPUT_NAMES[j], analytic[j]),
            }
        }
        let Some(path) = &self.csv else {
            return Ok(vec![]);
        };
        let mut out = files::create(path)?;
        match fd {
            Some(f) => {
                writeln!(out, "input,analytic,fd,rel_err")?;
                for j in 0..8 {
                    writeln!(
                        out,
                        "{},{:.16e},{:.16e},{:.16e}",
                        INPUT_NAMES[j],
                        analytic[j],
                        f[j],
                        rel(analytic[j], f[j])
                    )?;
                }
            }
            None => {
                writeln!(out, "input,analytic")?;
                for j in 0..8 {
                    writeln!(out, "{},{:.16e}", INPUT_NAMES[j], analytic[j])?;
                }
            }
        }
        out.flush()?;
        Ok(vec![path.clone()])
    }
}
