pub mod calibrate;
pub mod dataset;
pub mod market;
pub mod price;
pub mod train;
