//! Feed-forward network with a mirrored adjoint pass (a "twin" network).
//!
//! The forward pass maps inputs to a scalar; the adjoint pass runs the same
//! weights in reverse and returns the exact gradient of that scalar with
//! respect to the inputs. Training fits both outputs at once:
//!
//! ```text
//! C = 1/m sum_i (y^_i - y_i)^2 + lambda/m sum_i sum_j c_j (xbar^_ij - xbar_ij)^2
//! ```
//!
//! with `c_j = 1 / |Xbar_j|^2` from the training split. Gradients of `C`
//! with respect to the weights are derived by hand through both passes.

mod checkpoint;
mod grid;
mod network;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, NetworkCheckpoint, TrainingMeta};
pub use grid::{grid_search, write_leaderboard, GridResult, LeaderboardRow, SearchSpace};
pub use network::{Activation, ForwardCache, Network, NetworkSpec, WeightInit};
pub use train::{
    batch_loss, evaluate_mse_bp, loss, loss_gradient, train, write_history, AdamW, EarlyStopping, EpochRecord,
    LrSchedule, TrainOutcome, TrainingConfig, TrainingData,
};

use crate::dataset::NormalisationStats;
use crate::sensitivities::Gradient8;

/// Normalised-price prediction in original units for one raw input vector.
pub fn predict_price(x: &[f64; 8], ckpt: &NetworkCheckpoint) -> f64 {
    let xn = ckpt.stats.normalise_x(x);
    ckpt.stats.denormalise_y(ckpt.network.predict(&xn))
}

/// Price and input gradient in original units.
pub fn predict_price_and_gradient(x: &[f64; 8], ckpt: &NetworkCheckpoint) -> (f64, Gradient8) {
    predict_with(x, &ckpt.network, &ckpt.stats)
}

/// Input gradient in original units.
pub fn predict_gradient(x: &[f64; 8], ckpt: &NetworkCheckpoint) -> Gradient8 {
    predict_with(x, &ckpt.network, &ckpt.stats).1
}

fn predict_with(x: &[f64; 8], net: &Network, stats: &NormalisationStats) -> (f64, Gradient8) {
    let xn = stats.normalise_x(x);
    let cache = net.forward(&xn, None);
    let xbar = net.adjoint(&cache);
    let xbar: [f64; 8] = std::array::from_fn(|j| xbar[j]);
    (
        stats.denormalise_y(cache.output()),
        Gradient8::from_input_order(stats.denormalise_xbar(&xbar)),
    )
}

/// Batch prices; each entry is bit-identical to [`predict_price`].
pub fn predict_prices(xs: &[[f64; 8]], ckpt: &NetworkCheckpoint) -> Vec<f64> {
    xs.iter().map(|x| predict_price(x, ckpt)).collect()
}
