use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    add_business_days, maturity_years, write_quotes, Holidays, RateSource, RawPutQuote, TRADING_DAYS_PER_YEAR,
};
use crate::calibrate::{model_price, Backend, Quote, QuoteSet};
use crate::error::{Error, Result};
use crate::pricer::{HestonParams, QuadratureConfig};

/// Bid/ask spread and mid-price jitter, both relative to the model price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadNoise {
    pub relative_spread: f64,
    /// Standard deviation of a multiplicative mid perturbation.
    pub mid_jitter: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMeta {
    pub params: HestonParams,
    pub spot: f64,
    pub valuation_date: NaiveDate,
    pub feller_satisfied: bool,
    /// Set when the generating parameters violate the Feller condition.
    pub feller_warning: bool,
    pub noise: Option<SpreadNoise>,
}

#[derive(Debug, Clone)]
pub struct SyntheticQuotes {
    /// Quotes with model mid prices and attached rates.
    pub quotes: QuoteSet,
    /// Rows in the quote-file schema.
    pub rows: Vec<RawPutQuote>,
    pub meta: SyntheticMeta,
}

/// Prices a maturity x strike grid with the analytic pricer.
///
/// Maturities are snapped to whole business days so that reading the
/// written file back reproduces them exactly; strikes are rounded.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_quotes(
    params: &HestonParams,
    maturities: &[f64],
    strikes: &[f64],
    spot: f64,
    rates: &RateSource,
    valuation_date: NaiveDate,
    holidays: &Holidays,
    noise: Option<SpreadNoise>,
    quad: &QuadratureConfig,
) -> Result<SyntheticQuotes> {
    params.validate_for_pricing()?;
    if maturities.is_empty() || strikes.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one maturity and one strike".into(),
        ));
    }
    let feller = params.feller_satisfied();
    if !feller {
        log::warn!("generating parameters violate the Feller condition (2 kappa theta <= sigma^2)");
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    let backend = Backend::Analytic(*quad);

    let mut quotes = Vec::new();
    let mut rows = Vec::new();
    for &t in maturities {
        let days = (t * TRADING_DAYS_PER_YEAR).round();
        if !(days >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "maturity {t} is shorter than one business day"
            )));
        }
        let expiry = add_business_days(valuation_date, days as u32, holidays);
        let tau = maturity_years(valuation_date, expiry, holidays);
        let rate = rates.rate_at(tau)?;
        for &k in strikes {
            let strike = k.round();
            let mut q = Quote {
                tau,
                strike,
                price: 0.0,
                rate,
            };
            let price = model_price(&q, spot, params, &backend)?;
            let (bid, ask) = match (&noise, rng.as_mut()) {
                (Some(n), Some(rng)) => {
                    let mid = price * (1.0 + n.mid_jitter * normal.sample(rng));
                    let half = 0.5 * n.relative_spread * price;
                    ((mid - half).max(0.0), (mid + half).max(0.0))
                }
                _ => (price, price),
            };
            q.price = 0.5 * (bid + ask);
            rows.push(RawPutQuote {
                expiry,
                strike,
                bid,
                ask,
            });
            quotes.push(q);
        }
    }
    Ok(SyntheticQuotes {
        quotes: QuoteSet { spot, quotes },
        rows,
        meta: SyntheticMeta {
            params: *params,
            spot,
            valuation_date,
            feller_satisfied: feller,
            feller_warning: !feller,
            noise,
        },
    })
}

fn meta_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes the quote CSV and a `<file>.meta.json` sidecar; returns the sidecar path.
pub fn write_synthetic(path: &Path, synth: &SyntheticQuotes) -> Result<PathBuf> {
    write_quotes(BufWriter::new(File::create(path)?), &synth.rows)?;
    let meta = meta_path(path);
    let mut f = BufWriter::new(File::create(&meta)?);
    serde_json::to_writer_pretty(&mut f, &synth.meta)?;
    use std::io::Write;
    writeln!(f)?;
    Ok(meta)
}
