use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SamplingRanges;
use crate::error::{Error, Result};

/// Random Latin hypercube: for each input the `n` values fall one per
/// equal-width stratum, jittered uniformly inside it, in shuffled order.
pub fn lhs_sample(n: usize, ranges: &SamplingRanges, seed: u64) -> Result<Vec<[f64; 8]>> {
    if n == 0 {
        return Err(Error::InvalidArgument("lhs_sample needs n >= 1".into()));
    }
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![[0.0; 8]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for (j, [lo, hi]) in ranges.as_array().into_iter().enumerate() {
        strata.shuffle(&mut rng);
        let width = (hi - lo) / n as f64;
        for (row, &k) in out.iter_mut().zip(&strata) {
            let v = lo + (k as f64 + rng.random::<f64>()) * width;
            row[j] = v.min(hi);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_per_stratum() {
        let r = SamplingRanges::default();
        for n in [1, 4, 37] {
            let s = lhs_sample(n, &r, 5).unwrap();
            for (j, [lo, hi]) in r.as_array().into_iter().enumerate() {
                let mut seen = vec![false; n];
                for row in &s {
                    let k = (((row[j] - lo) / (hi - lo)) * n as f64).floor().min(n as f64 - 1.0) as usize;
                    assert!(!seen[k], "input {j} stratum {k} hit twice");
                    seen[k] = true;
                }
            }
        }
    }

    #[test]
    fn marginal_means_near_midpoints() {
        let r = SamplingRanges::default();
        let s = lhs_sample(10_000, &r, 17).unwrap();
        for (j, [lo, hi]) in r.as_array().into_iter().enumerate() {
            let mean = s.iter().map(|x| x[j]).sum::<f64>() / s.len() as f64;
            assert!((mean - 0.5 * (lo + hi)).abs() < 0.01 * (hi - lo), "input {j}");
        }
    }

    #[test]
    fn seeded() {
        let r = SamplingRanges::default();
        assert_eq!(lhs_sample(50, &r, 1).unwrap(), lhs_sample(50, &r, 1).unwrap());
        assert_ne!(lhs_sample(50, &r, 1).unwrap(), lhs_sample(50, &r, 2).unwrap());
        assert!(lhs_sample(0, &r, 1).is_err());
    }
}
