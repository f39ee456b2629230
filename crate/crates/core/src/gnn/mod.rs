//! Two-layer mean-aggregation graph network with hand-written gradients,
//! cross-entropy plus label-proportion (KL) losses, Adam, and the training loop.

mod adam;
mod checkpoint;
mod loss;
mod model;
mod train;

pub use adam::Adam;
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use loss::{bag_predictions, kl_divergence, loss_gnn, loss_llp, LossTerm, LOG_FLOOR};
pub use model::{backward, encode_input, forward, neighbor_mean, softmax_rows, Dropout, ForwardCache, ModelParams};
pub use train::{
    accuracy, evaluate, objective, train, EpochMetrics, Monitor, Objective, Selection, TrainConfig, TrainInputs,
    TrainOutcome,
};
