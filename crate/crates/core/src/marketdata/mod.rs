//! Put-quote ingestion, business-day maturities and yield curves.
//!
//! Quote files are CSV with header `expiry,strike,bid,ask` and ISO dates.
//! Maturities count business days (weekends and listed holidays excluded)
//! over a 252-day year. Rates are stored as decimals everywhere; percent
//! inputs are converted on ingestion only.

mod nss;
mod synth;

use std::collections::BTreeSet;
use std::io::{BufRead, Read, Write};

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::calibrate::{Quote, QuoteSet};
use crate::error::{Error, Result};

pub use nss::{fit_nss, YieldCurve, LAMBDA_BOUNDS, LAMBDA_STARTS};
pub use synth::{synthesize_quotes, write_synthetic, SpreadNoise, SyntheticMeta, SyntheticQuotes};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Quotes at or below this maturity (years) are dropped.
pub const MIN_MATURITY: f64 = 0.05;

/// Largest tolerated share of malformed rows.
pub const MAX_MALFORMED_FRACTION: f64 = 0.05;

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Par yields (percent) by maturity in years, 1 month to 30 years.
pub const SAMPLE_PAR_YIELDS_PCT: [(f64, f64); 12] = [
    (1.0 / 12.0, 2.24),
    (2.0 / 12.0, 2.43),
    (3.0 / 12.0, 2.65),
    (6.0 / 12.0, 3.13),
    (1.0, 3.26),
    (2.0, 3.23),
    (3.0, 3.13),
    (5.0, 2.93),
    (7.0, 2.86),
    (10.0, 2.78),
    (20.0, 3.27),
    (30.0, 3.04),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPutQuote {
    pub expiry: NaiveDate,
    pub strike: f64,
    pub bid: f64,
    pub ask: f64,
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).map_err(|e| Error::InvalidArgument(format!("bad date `{s}`: {e}")))
}

pub type Holidays = BTreeSet<NaiveDate>;

/// One ISO date per line; blank lines and `#` comments are ignored.
pub fn read_holidays<R: BufRead>(input: R) -> Result<Holidays> {
    let mut out = Holidays::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.split('#').next().unwrap_or("").trim();
        if t.is_empty() {
            continue;
        }
        let d = NaiveDate::parse_from_str(t, DATE_FORMAT).map_err(|e| Error::parse(i + 1, format!("{t}: {e}")))?;
        out.insert(d);
    }
    Ok(out)
}

fn is_business_day(d: NaiveDate, holidays: &Holidays) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) && !holidays.contains(&d)
}

/// Business days in `(from, to]`; negative when `to` precedes `from`.
pub fn business_days_between(from: NaiveDate, to: NaiveDate, holidays: &Holidays) -> i64 {
    let (lo, hi, sign) = if to >= from { (from, to, 1) } else { (to, from, -1) };
    let count = lo
        .iter_days()
        .skip(1)
        .take_while(|d| *d <= hi)
        .filter(|d| is_business_day(*d, holidays))
        .count();
    sign * count as i64
}

/// The date `n` business days after `from`.
pub fn add_business_days(from: NaiveDate, n: u32, holidays: &Holidays) -> NaiveDate {
    from.iter_days()
        .skip(1)
        .filter(|d| is_business_day(*d, holidays))
        .nth(n.saturating_sub(1) as usize)
        .filter(|_| n > 0)
        .unwrap_or(from)
}

pub fn maturity_years(valuation: NaiveDate, expiry: NaiveDate, holidays: &Holidays) -> f64 {
    business_days_between(valuation, expiry, holidays) as f64 / TRADING_DAYS_PER_YEAR
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub valuation_date: NaiveDate,
    pub spot: f64,
    pub holidays: Holidays,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub rows: usize,
    pub malformed: usize,
    pub zero_quote: usize,
    pub short_maturity: usize,
    pub kept: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedQuotes {
    /// Rates are zero until [`attach_rates`] runs.
    pub quotes: QuoteSet,
    pub stats: LoadStats,
}

fn parse_row(rec: &csv::StringRecord) -> std::result::Result<RawPutQuote, String> {
    if rec.len() != 4 {
        return Err(format!("expected 4 fields, found {}", rec.len()));
    }
    let num = |i: usize, name: &str| -> std::result::Result<f64, String> {
        let v: f64 = rec[i]
            .trim()
            .parse()
            .map_err(|e| format!("{name} `{}`: {e}", &rec[i]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name} is not finite"))
        }
    };
    let expiry =
        NaiveDate::parse_from_str(rec[0].trim(), DATE_FORMAT).map_err(|e| format!("expiry `{}`: {e}", &rec[0]))?;
    let q = RawPutQuote {
        expiry,
        strike: num(1, "strike")?,
        bid: num(2, "bid")?,
        ask: num(3, "ask")?,
    };
    if q.strike <= 0.0 {
        return Err("strike must be positive".into());
    }
    // A zero side is a filter case, not a malformed row.
    if q.bid < 0.0 || q.ask < 0.0 || (q.bid > 0.0 && q.ask > 0.0 && q.ask < q.bid) {
        return Err(format!("need ask >= bid >= 0, got bid {} ask {}", q.bid, q.ask));
    }
    Ok(q)
}

/// Reads a quote file and applies the three filters: zero bid or ask
/// dropped, maturity at or below [`MIN_MATURITY`] dropped, price = mid.
/// Strikes are rounded to integers.
pub fn load_quotes<R: Read>(input: R, opts: &LoadOptions) -> Result<LoadedQuotes> {
    if !(opts.spot > 0.0 && opts.spot.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "spot",
            value: opts.spot,
            reason: "must be > 0",
        });
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    if header != ["expiry", "strike", "bid", "ask"] {
        return Err(Error::parse(
            1,
            format!("expected header expiry,strike,bid,ask, found {}", header.join(",")),
        ));
    }

    let mut stats = LoadStats::default();
    let mut quotes = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        stats.rows += 1;
        let parsed = rec.map_err(|e| e.to_string()).and_then(|r| parse_row(&r));
        let raw = match parsed {
            Ok(q) => q,
            Err(msg) => {
                log::warn!("line {line}: skipping malformed row: {msg}");
                stats.malformed += 1;
                continue;
            }
        };
        if raw.bid == 0.0 || raw.ask == 0.0 {
            stats.zero_quote += 1;
            continue;
        }
        let tau = maturity_years(opts.valuation_date, raw.expiry, &opts.holidays);
        if tau <= MIN_MATURITY {
            stats.short_maturity += 1;
            continue;
        }
        quotes.push(Quote {
            tau,
            strike: raw.strike.round(),
            price: 0.5 * (raw.bid + raw.ask),
            rate: 0.0,
        });
    }
    if stats.rows > 0 && stats.malformed as f64 > MAX_MALFORMED_FRACTION * stats.rows as f64 {
        return Err(Error::InvalidArgument(format!(
            "{} of {} rows are malformed (limit {:.0}%)",
            stats.malformed,
            stats.rows,
            100.0 * MAX_MALFORMED_FRACTION
        )));
    }
    stats.kept = quotes.len();
    Ok(LoadedQuotes {
        quotes: QuoteSet {
            spot: opts.spot,
            quotes,
        },
        stats,
    })
}

pub fn write_quotes<W: Write>(out: W, rows: &[RawPutQuote]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["expiry", "strike", "bid", "ask"])?;
    for q in rows {
        w.write_record([
            q.expiry.format(DATE_FORMAT).to_string(),
            q.strike.to_string(),
            q.bid.to_string(),
            q.ask.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `tau_years,rate` with decimal rates.
pub fn read_rates<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
    if header != ["tau_years", "rate"] {
        return Err(Error::parse(
            1,
            format!("expected header tau_years,rate, found {}", header.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(i + 2, format!("{s}: {e}")));
        out.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    Ok(out)
}

pub fn write_rates<W: Write>(mut out: W, rates: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "tau_years,rate")?;
    for (t, r) in rates {
        writeln!(out, "{t},{r}")?;
    }
    Ok(())
}

/// `maturity_years,rate_percent` rows converted to decimals.
pub fn read_par_yields_percent<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(i + 2, format!("{s}: {e}")));
        out.push((parse(&rec[0])?, parse(&rec[1])? / 100.0));
    }
    Ok(out)
}

pub fn percent_to_decimal(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().map(|&(t, r)| (t, r / 100.0)).collect()
}

/// Where per-maturity rates come from.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSource {
    Curve(YieldCurve),
    /// Exact `(tau, rate)` pairs; every quote maturity must appear.
    Table(Vec<(f64, f64)>),
}

impl RateSource {
    pub fn rate_at(&self, tau: f64) -> Result<f64> {
        match self {
            RateSource::Curve(c) => Ok(c.rate_at(tau)),
            RateSource::Table(t) => t
                .iter()
                .find(|(m, _)| (m - tau).abs() <= 1e-9 * tau.max(1.0))
                .map(|&(_, r)| r)
                .ok_or_else(|| Error::InvalidArgument(format!("no rate listed for maturity {tau}"))),
        }
    }
}

pub fn rate_at(curve: &YieldCurve, tau: f64) -> f64 {
    curve.rate_at(tau)
}

/// Sets every quote's rate from `source`.
pub fn attach_rates(mut quotes: QuoteSet, source: &RateSource) -> Result<QuoteSet> {
    for q in &mut quotes.quotes {
        q.rate = source.rate_at(q.tau)?;
    }
    Ok(quotes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        parse_date(s).unwrap()
    }

    #[test]
    fn sixty_three_business_days_is_a_quarter() {
        let v = d("2022-08-10");
        let e = add_business_days(v, 63, &Holidays::new());
        assert_eq!(business_days_between(v, e, &Holidays::new()), 63);
        assert_eq!(maturity_years(v, e, &Holidays::new()), 0.25);
    }

    #[test]
    fn weekends_and_holidays_skipped() {
        // Friday to the following Tuesday with Monday a holiday.
        let h: Holidays = [d("2022-09-05")].into_iter().collect();
        assert_eq!(business_days_between(d("2022-09-02"), d("2022-09-06"), &h), 1);
        assert_eq!(business_days_between(d("2022-09-06"), d("2022-09-02"), &h), -1);
        assert_eq!(add_business_days(d("2022-09-02"), 1, &h), d("2022-09-06"));
    }

    #[test]
    fn holiday_file() {
        let text = "# US\n2022-09-05\n\n2022-11-24 # thanksgiving\n";
        let h = read_holidays(text.as_bytes()).unwrap();
        assert_eq!(h.len(), 2);
        assert!(read_holidays("2022-13-01\n".as_bytes()).is_err());
    }

    #[test]
    fn rate_table_lookup() {
        let src = RateSource::Table(vec![(0.5, 0.031), (1.0, 0.033)]);
        assert_eq!(src.rate_at(1.0).unwrap(), 0.033);
        assert!(src.rate_at(2.0).is_err());
    }
}
