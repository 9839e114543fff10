//! Heston stochastic-volatility toolkit: semi-analytic put pricing with
//! closed-form sensitivities, synthetic differential datasets, a twin
//! (value + adjoint) neural network, and calibration to put quotes.

pub mod calibrate;
pub mod dataset;
pub mod error;
pub mod marketdata;
pub mod pricer;
pub mod sensitivities;
pub mod twinnet;

pub use error::{Error, Result};
