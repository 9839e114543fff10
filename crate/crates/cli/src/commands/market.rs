use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use heston_dml::marketdata::{
    fit_nss, parse_date, percent_to_decimal, read_holidays, read_par_yields_percent, synthesize_quotes,
    write_synthetic, Holidays, SpreadNoise, SAMPLE_PAR_YIELDS_PCT,
};
use heston_dml::pricer::{HestonParams, QuadratureConfig};
use serde::{Deserialize, Serialize};

use super::calibrate::{RateArgs, RatesInput};
use crate::error::{CliError, CliResult};
use crate::files;

#[derive(Debug, Args)]
pub struct SynthArgs {
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
    /// Maturities in years, comma separated; snapped to whole business days.
    #[arg(long, value_delimiter = ',', required = true)]
    pub maturities: Vec<f64>,
    /// Strikes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub strikes: Vec<f64>,
    #[arg(long)]
    pub spot: f64,
    #[arg(long)]
    pub valuation_date: String,
    #[arg(long)]
    pub holidays: Option<PathBuf>,
    #[command(flatten)]
    pub rates: RateArgs,
    /// Relative bid/ask spread around the model price.
    #[arg(long)]
    pub spread: Option<f64>,
    /// Relative standard deviation of a mid-price perturbation.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quote CSV; metadata goes to `<out>.meta.json`.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthRun {
    pub params: HestonParams,
    pub maturities: Vec<f64>,
    pub strikes: Vec<f64>,
    pub spot: f64,
    pub valuation_date: String,
    pub holidays: Option<PathBuf>,
    pub rates: RatesInput,
    pub noise: Option<SpreadNoise>,
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn resolve(self) -> CliResult<SynthRun> {
        let rates = self.rates.resolve().ok_or_else(|| {
            CliError::usage("one of --rates, --curve, --par-yields, --sample-curve or --flat-rate is required")
        })?;
        let noise = if self.spread.is_some() || self.jitter > 0.0 {
            Some(SpreadNoise {
                relative_spread: self.spread.unwrap_or(0.0),
                mid_jitter: self.jitter,
                seed: self.seed,
            })
        } else {
            None
        };
        Ok(SynthRun {
            params: HestonParams {
                kappa: self.kappa,
                theta: self.theta,
                sigma: self.sigma,
                rho: self.rho,
                v0: self.v0,
            },
            maturities: self.maturities,
            strikes: self.strikes,
            spot: self.spot,
            valuation_date: self.valuation_date,
            holidays: self.holidays,
            rates,
            noise,
            out: self.out,
        })
    }
}

impl SynthRun {
    pub fn execute(&self) -> CliResult<Vec<PathBuf>> {
        let holidays = match &self.holidays {
            Some(p) => read_holidays(files::open(p)?)?,
            None => Holidays::new(),
        };
        let synth = synthesize_quotes(
            &self.params,
            &self.maturities,
            &self.strikes,
            self.spot,
            &self.rates.source()?,
            parse_date(&self.valuation_date)?,
            &holidays,
            self.noise,
            &QuadratureConfig::default(),
        )?;
        if synth.meta.feller_warning {
            log::warn!("parameters violate the Feller condition 2 kappa theta > sigma^2");
        }
        if let Some(dir) = self.out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let meta = write_synthetic(&self.out, &synth)?;
        println!("wrote {} quotes to {}", synth.rows.len(), self.out.display());
        Ok(vec![self.out.clone(), meta])
    }
}

#[derive(Debug, Args)]
pub struct FitCurveArgs {
    /// Par yields in percent (`maturity_years,rate_percent`); the built-in
    /// Treasury sample when omitted.
    #[arg(long)]
    pub par_yields: Option<PathBuf>,
    /// Curve record.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitCurveRun {
    pub par_yields: Option<PathBuf>,
    pub out: PathBuf,
}

impl FitCurveArgs {
    pub fn resolve(self) -> FitCurveRun {
        FitCurveRun {
            par_yields: self.par_yields,
            out: self.out,
        }
    }
}

impl FitCurveRun {
    pub fn execute(&self) -> CliResult<Vec<PathBuf>> {
        let points = match &self.par_yields {
            Some(p) => read_par_yields_percent(files::open(p)?)?,
            None => percent_to_decimal(&SAMPLE_PAR_YIELDS_PCT),
        };
        let curve = fit_nss(&points)?;
        let [b0, b1, b2, b3] = curve.beta;
        let [l1, l2] = curve.lambda;
        println!("beta   {b0:.8} {b1:.8} {b2:.8} {b3:.8}");
        println!("lambda {l1:.8} {l2:.8}");
        println!("rms residual {:.3} bp", curve.rms_residual * 1e4);
        println!("{:>10} {:>10} {:>10}", "tau", "input", "fitted");
        for (t, r) in &points {
            println!("{t:>10.4} {:>10.4} {:>10.4}", r * 100.0, curve.rate_at(*t) * 100.0);
        }
        let mut out = files::create(&self.out)?;
        curve.write_record(&mut out)?;
        out.flush()?;
        Ok(vec![self.out.clone()])
    }
}
