use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{FellerMode, LabeledSample, NormalisationStats, SamplingRanges};
use crate::error::{Error, Result};
use crate::pricer::QuadratureConfig;

pub const CSV_HEADER: [&str; 17] = [
    "m", "tau", "r", "kappa", "v0", "theta", "sigma", "rho", "price", "d_m", "d_tau", "d_r", "d_kappa", "d_v0",
    "d_theta", "d_sigma", "d_rho",
];

/// Sidecar describing how a dataset file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n: usize,
    pub seed: u64,
    pub feller_mode: FellerMode,
    pub ranges: SamplingRanges,
    pub quadrature: QuadratureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalisation: Option<NormalisationStats>,
}

/// Writes samples with 17 significant digits per value.
pub fn write_csv<W: Write>(out: W, samples: &[LabeledSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let mut row: Vec<String> = Vec::with_capacity(17);
    for s in samples {
        row.clear();
        row.extend(
            s.x.iter()
                .chain([&s.y])
                .chain(s.xbar.iter())
                .map(|v| format!("{v:.16e}")),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<LabeledSample>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::parse(1, format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.len() != 17 {
            return Err(Error::parse(line, format!("expected 17 fields, found {}", rec.len())));
        }
        let mut v = [0.0; 17];
        for (k, field) in rec.iter().enumerate() {
            v[k] = field
                .parse()
                .map_err(|_| Error::parse(line, format!("`{field}` in column {} is not a number", CSV_HEADER[k])))?;
        }
        out.push(LabeledSample {
            x: std::array::from_fn(|j| v[j]),
            y: v[8],
            xbar: std::array::from_fn(|j| v[9 + j]),
        });
    }
    Ok(out)
}

pub fn write_sidecar<W: Write>(out: W, meta: &DatasetMeta) -> Result<()> {
    serde_json::to_writer_pretty(out, meta)?;
    Ok(())
}

pub fn read_sidecar<R: Read>(input: R) -> Result<DatasetMeta> {
    Ok(serde_json::from_reader(input)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let s = LabeledSample {
            x: [0.1, 1.0 / 3.0, -0.01, 2.9, 1e-4, 0.7, 1.9, -0.0],
            y: std::f64::consts::PI / 10.0,
            xbar: [-1e-300, 5e-17, 1.0, -2.0, 3.0, 4.0, 5.0, f64::MIN_POSITIVE],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &[s, s]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text
            .starts_with("m,tau,r,kappa,v0,theta,sigma,rho,price,d_m,d_tau,d_r,d_kappa,d_v0,d_theta,d_sigma,d_rho\n"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![s, s]);
    }

    #[test]
    fn malformed_rows_report_line() {
        let text = format!("{}\n1,2,3\n", CSV_HEADER.join(","));
        assert!(read_csv(text.as_bytes()).is_err());
        let text = format!("{}\n{}x\n", CSV_HEADER.join(","), "1,".repeat(16));
        match read_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
