use serde::{Deserialize, Serialize};

use super::LabeledSample;
use crate::error::{Error, Result};

/// Centring/scaling fitted on the training split.
///
/// Differentials transform as `xbar_n = xbar * std(x) / std(y)`, which keeps
/// them equal to the derivative of the normalised label with respect to the
/// normalised input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalisationStats {
    pub x_mean: [f64; 8],
    pub x_std: [f64; 8],
    pub y_mean: f64,
    pub y_std: f64,
    /// `std(x_j) / std(y)`.
    pub xbar_scale: [f64; 8],
    /// Mean of the squared normalised differentials per input.
    pub xbar_sq_norm: [f64; 8],
}

fn mean_std(values: impl Iterator<Item = f64> + Clone, n: f64) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fits statistics on `train`. Standard deviations are population values.
pub fn fit_normaliser(train: &[LabeledSample]) -> Result<NormalisationStats> {
    if train.len() < 2 {
        return Err(Error::InvalidArgument(
            "normalisation needs at least two samples".into(),
        ));
    }
    let n = train.len() as f64;
    let mut x_mean = [0.0; 8];
    let mut x_std = [0.0; 8];
    for j in 0..8 {
        (x_mean[j], x_std[j]) = mean_std(train.iter().map(|s| s.x[j]), n);
    }
    let (y_mean, y_std) = mean_std(train.iter().map(|s| s.y), n);
    let all_positive = x_std.iter().chain([&y_std]).all(|s| *s > 0.0 && s.is_finite());
    if !all_positive {
        return Err(Error::InvalidArgument(
            "a training column has zero or non-finite spread".into(),
        ));
    }
    let mut xbar_scale = [0.0; 8];
    let mut xbar_sq_norm = [0.0; 8];
    for j in 0..8 {
        xbar_scale[j] = x_std[j] / y_std;
        let scale = xbar_scale[j];
        xbar_sq_norm[j] = train.iter().map(|s| (s.xbar[j] * scale).powi(2)).sum::<f64>() / n;
    }
    Ok(NormalisationStats {
        x_mean,
        x_std,
        y_mean,
        y_std,
        xbar_scale,
        xbar_sq_norm,
    })
}

impl NormalisationStats {
    /// Identity transform, useful for data that is already normalised.
    pub fn identity() -> Self {
        Self {
            x_mean: [0.0; 8],
            x_std: [1.0; 8],
            y_mean: 0.0,
            y_std: 1.0,
            xbar_scale: [1.0; 8],
            xbar_sq_norm: [1.0; 8],
        }
    }

    pub fn normalise_x(&self, x: &[f64; 8]) -> [f64; 8] {
        std::array::from_fn(|j| (x[j] - self.x_mean[j]) / self.x_std[j])
    }

    pub fn denormalise_x(&self, x: &[f64; 8]) -> [f64; 8] {
        std::array::from_fn(|j| x[j] * self.x_std[j] + self.x_mean[j])
    }

    pub fn normalise_y(&self, y: f64) -> f64 {
        (y - self.y_mean) / self.y_std
    }

    pub fn denormalise_y(&self, y: f64) -> f64 {
        y * self.y_std + self.y_mean
    }

    pub fn normalise_xbar(&self, xbar: &[f64; 8]) -> [f64; 8] {
        std::array::from_fn(|j| xbar[j] * self.xbar_scale[j])
    }

    pub fn denormalise_xbar(&self, xbar: &[f64; 8]) -> [f64; 8] {
        std::array::from_fn(|j| xbar[j] / self.xbar_scale[j])
    }

    /// Per-input weights `1 / |Xbar_j|^2` of the differential loss term.
    pub fn differential_weights(&self) -> [f64; 8] {
        std::array::from_fn(|j| {
            if self.xbar_sq_norm[j] > 0.0 {
                1.0 / self.xbar_sq_norm[j]
            } else {
                0.0
            }
        })
    }

    pub fn apply(&self, samples: &[LabeledSample]) -> Vec<LabeledSample> {
        samples
            .iter()
            .map(|s| LabeledSample {
                x: self.normalise_x(&s.x),
                y: self.normalise_y(s.y),
                xbar: self.normalise_xbar(&s.xbar),
            })
            .collect()
    }

    pub fn invert(&self, samples: &[LabeledSample]) -> Vec<LabeledSample> {
        samples
            .iter()
            .map(|s| LabeledSample {
                x: self.denormalise_x(&s.x),
                y: self.denormalise_y(s.y),
                xbar: self.denormalise_xbar(&s.xbar),
            })
            .collect()
    }
}
