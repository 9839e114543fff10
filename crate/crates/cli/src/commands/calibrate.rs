use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use heston_dml::calibrate::{
    compare_backends, default_initial_five, default_initial_three, differential_evolution, fix_v0_from_atm_iv,
    nelder_mead, price_comparison, write_prices, write_result, write_trace, Backend, CalibrationProblem,
    CalibrationResult, DeConfig, NelderMeadConfig, QuoteSet, THREE_PARAM_KAPPA,
};
use heston_dml::marketdata::{
    attach_rates, fit_nss, load_quotes, parse_date, percent_to_decimal, read_holidays, read_par_yields_percent,
    read_rates, Holidays, LoadOptions, RateSource, YieldCurve, SAMPLE_PAR_YIELDS_PCT,
};
use heston_dml::pricer::{HestonParams, QuadratureConfig};
use heston_dml::twinnet::read_checkpoint;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::files;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Analytic,
    Network,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerArg {
    NelderMead,
    De,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    /// All five parameters free.
    Five,
    /// theta, sigma, rho free; kappa and v0 fixed.
    Three,
}

/// Where quote rates come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatesInput {
    /// `tau_years,rate` file, used verbatim per maturity.
    Table(PathBuf),
    /// Saved yield-curve record.
    Curve(PathBuf),
    /// Par yields in percent, fitted on load.
    ParYields(PathBuf),
    /// The built-in Treasury par-yield sample, fitted on load.
    SampleTreasury,
    Flat(f64),
}

impl RatesInput {
    pub fn source(&self) -> CliResult<RateSource> {
        Ok(match self {
            RatesInput::Table(p) => RateSource::Table(read_rates(files::open(p)?)?),
            RatesInput::Curve(p) => RateSource::Curve(YieldCurve::read_record(files::open(p)?)?),
            RatesInput::ParYields(p) => RateSource::Curve(fit_nss(&read_par_yields_percent(files::open(p)?)?)?),
            RatesInput::SampleTreasury => RateSource::Curve(fit_nss(&percent_to_decimal(&SAMPLE_PAR_YIELDS_PCT))?),
            RatesInput::Flat(r) => RateSource::Curve(YieldCurve::flat(*r)),
        })
    }
}

#[derive(Debug, Args)]
#[group(id = "rate-source", multiple = false)]
pub struct RateArgs {
    /// Per-maturity rates file (`tau_years,rate`).
    #[arg(long, group = "rate-source")]
    pub rates: Option<PathBuf>,
    /// Yield-curve record written by `fit-curve`.
    #[arg(long, group = "rate-source")]
    pub curve: Option<PathBuf>,
    /// Par yields in percent (`maturity_years,rate_percent`), fitted on load.
    #[arg(long, group = "rate-source")]
    pub par_yields: Option<PathBuf>,
    /// Use the built-in Treasury par-yield sample.
    #[arg(long, group = "rate-source")]
    pub sample_curve: bool,
    #[arg(long, group = "rate-source", allow_negative_numbers = true)]
    pub flat_rate: Option<f64>,
}

impl RateArgs {
    pub fn resolve(self) -> Option<RatesInput> {
        if let Some(p) = self.rates {
            Some(RatesInput::Table(p))
        } else if let Some(p) = self.curve {
            Some(RatesInput::Curve(p))
        } else if let Some(p) = self.par_yields {
            Some(RatesInput::ParYields(p))
        } else if self.sample_curve {
            Some(RatesInput::SampleTreasury)
        } else {
            self.flat_rate.map(RatesInput::Flat)
        }
    }
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Put quotes (`expiry,strike,bid,ask`).
    #[arg(long)]
    pub quotes: PathBuf,
    /// Valuation date, YYYY-MM-DD.
    #[arg(long)]
    pub valuation_date: String,
    #[arg(long)]
    pub spot: f64,
    /// One YYYY-MM-DD holiday per line.
    #[arg(long)]
    pub holidays: Option<PathBuf>,
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, value_enum, default_value = "analytic")]
    pub backend: BackendArg,
    /// Trained network for the network backend.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Calibrate with both backends and write a comparison report.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, value_enum, default_value = "nelder-mead")]
    pub optimizer: OptimizerArg,
    #[arg(long, value_enum, default_value = "five")]
    pub mode: ModeArg,
    /// At-the-money implied volatility; three-parameter mode fixes v0 = iv^2.
    #[arg(long)]
    pub atm_iv: Option<f64>,
    /// Fixed v0 for three-parameter mode (instead of --atm-iv).
    #[arg(long)]
    pub v0: Option<f64>,
    /// Fixed kappa for three-parameter mode.
    #[arg(long, default_value_t = THREE_PARAM_KAPPA)]
    pub kappa: f64,
    /// Nelder-Mead start as kappa,theta,sigma,rho,v0.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub initial: Option<Vec<f64>>,
    /// TOML with optional [nelder_mead], [de] and [quadrature] sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// DE seed (overrides the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for result, trace and price files.
    #[arg(short, long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub nelder_mead: NelderMeadConfig,
    pub de: DeConfig,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrateRun {
    pub quotes: PathBuf,
    pub valuation_date: String,
    pub spot: f64,
    pub holidays: Option<PathBuf>,
    pub rates: RatesInput,
    pub backend: BackendArg,
    pub checkpoint: Option<PathBuf>,
    pub compare: bool,
    pub optimizer: OptimizerArg,
    pub mode: ModeArg,
    pub kappa: f64,
    pub v0: Option<f64>,
    pub initial: Option<[f64; 5]>,
    pub settings: OptimizerSettings,
    pub out_dir: PathBuf,
}

impl CalibrateArgs {
    pub fn resolve(self) -> CliResult<CalibrateRun> {
        let rates = self.rates.resolve().ok_or_else(|| {
            CliError::usage("one of --rates, --curve, --par-yields, --sample-curve or --flat-rate is required")
        })?;
        if (self.backend == BackendArg::Network || self.compare) && self.checkpoint.is_none() {
            return Err(CliError::usage("the network backend needs --checkpoint"));
        }
        let v0 = match (self.v0, self.atm_iv) {
            (Some(_), Some(_)) => return Err(CliError::usage("give either --v0 or --atm-iv, not both")),
            (Some(v), None) => Some(v),
            (None, Some(iv)) => Some(fix_v0_from_atm_iv(iv)),
            (None, None) => None,
        };
        if self.mode == ModeArg::Three && v0.is_none() {
            return Err(CliError::usage("three-parameter mode needs --atm-iv or --v0"));
        }
        let initial = match self.initial.as_deref() {
            None => None,
            Some(&[a, b, c, d, e]) => Some([a, b, c, d, e]),
            Some(v) => return Err(CliError::usage(format!("--initial needs 5 values, got {}", v.len()))),
        };
        let mut settings: OptimizerSettings = files::load_toml(self.config.as_deref())?;
        if let Some(s) = self.seed {
            settings.de.seed = s;
        }
        Ok(CalibrateRun {
            quotes: self.quotes,
            valuation_date: self.valuation_date,
            spot: self.spot,
            holidays: self.holidays,
            rates,
            backend: self.backend,
            checkpoint: self.checkpoint,
            compare: self.compare,
            optimizer: self.optimizer,
            mode: self.mode,
            kappa: self.kappa,
            v0,
            initial,
            settings,
            out_dir: self.out_dir,
        })
    }
}

impl CalibrateRun {
    fn load(&self) -> CliResult<QuoteSet> {
        let holidays = match &self.holidays {
            Some(p) => read_holidays(files::open(p)?)?,
            None => Holidays::new(),
        };
        let opts = LoadOptions {
            valuation_date: parse_date(&self.valuation_date)?,
            spot: self.spot,
            holidays,
        };
        let loaded = load_quotes(files::open(&self.quotes)?, &opts)?;
        let s = loaded.stats;
        log::info!(
            "{} rows: kept {}, zero quotes {}, short maturity {}, malformed {}",
            s.rows,
            s.kept,
            s.zero_quote,
            s.short_maturity,
            s.malformed
        );
        Ok(attach_rates(loaded.quotes, &self.rates.source()?)?)
    }

    fn problem(&self, quotes: QuoteSet, backend: Backend) -> CliResult<CalibrationProblem> {
        Ok(match self.mode {
            ModeArg::Five => CalibrationProblem::five(quotes, backend)?,
            ModeArg::Three => {
                let mut p = CalibrationProblem::three(quotes, backend, self.v0.expect("checked on resolve"))?;
                p.fixed[0] = self.kappa;
                p
            }
        })
    }

    fn initial(&self) -> HestonParams {
        if let Some(a) = self.initial {
            return HestonParams::from_array(a);
        }
        match self.mode {
            ModeArg::Five => default_initial_five(),
            ModeArg::Three => {
                let [theta, sigma, rho] = default_initial_three();
                HestonParams {
                    kappa: self.kappa,
                    theta,
                    sigma,
                    rho,
                    v0: self.v0.unwrap_or(0.0),
                }
            }
        }
    }

    fn run_one(&self, problem: &CalibrationProblem) -> CliResult<CalibrationResult> {
        Ok(match self.optimizer {
            OptimizerArg::NelderMead => nelder_mead(problem, &self.initial(), &self.settings.nelder_mead)?,
            OptimizerArg::De => differential_evolution(problem, &self.settings.de)?,
        })
    }

    fn write_outputs(
        &self,
        problem: &CalibrationProblem,
        r: &CalibrationResult,
        written: &mut Vec<PathBuf>,
    ) -> CliResult<()> {
        let name = |stem: &str| self.out_dir.join(format!("{stem}_{}.csv", r.backend));
        let save = |path: PathBuf, f: &dyn Fn(&mut dyn Write) -> heston_dml::Result<()>| -> CliResult<PathBuf> {
            let mut out = files::create(&path)?;
            f(&mut out)?;
            out.flush()?;
            Ok(path)
        };
        written.push(save(name("result"), &|w| write_result(w, r))?);
        written.push(save(name("trace"), &|w| write_trace(w, &r.trace))?);
        let rows = price_comparison(&problem.quotes, &r.params, &self.settings.quadrature)?;
        written.push(save(name("prices"), &|w| write_prices(w, &rows))?);
        Ok(())
    }

    pub fn execute(&self) -> CliResult<Vec<PathBuf>> {
        let quotes = self.load()?;
        let analytic = Backend::Analytic(self.settings.quadrature);
        let network = match &self.checkpoint {
            Some(p) if self.compare || self.backend == BackendArg::Network => {
                Some(Backend::Network(Arc::new(read_checkpoint(files::open(p)?)?)))
            }
            _ => None,
        };
        let backends: Vec<Backend> = if self.compare {
            vec![analytic, network.expect("checked on resolve")]
        } else if self.backend == BackendArg::Network {
            vec![network.expect("checked on resolve")]
        } else {
            vec![analytic]
        };

        let mut written = Vec::new();
        let mut results = Vec::new();
        for backend in backends {
            let problem = self.problem(quotes.clone(), backend)?;
            let r = self.run_one(&problem)?;
            println!("{r}\n");
            self.write_outputs(&problem, &r, &mut written)?;
            results.push((problem, r));
        }
        if let [(problem, a), (_, b)] = results.as_slice() {
            let cmp = compare_backends(problem, a, b, &self.settings.quadrature)?;
            println!("{cmp}");
            let path = self.out_dir.join("comparison.csv");
            let mut out = files::create(&path)?;
            cmp.write_csv(&mut out)?;
            out.flush()?;
            written.push(path);
        }
        Ok(written)
    }
}
