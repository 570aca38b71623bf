//! Numeric kernels, the per-filter-size network and its optimizer.

mod adadelta;
mod checkpoint;
mod kernels;
mod network;

pub use adadelta::{adadelta_step, AdadeltaConfig, AdadeltaState, RowAdadelta};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, CHECKPOINT_VERSION};
pub use kernels::{
    bias_activation, conv_forward, conv_forward_channels, dropout, max_pool, relu, softmax,
    softmax_forward, weighted_nll_loss, Dropped, FeatureMap, FilterBank, Pooled, Preactivations,
    SoftmaxHead, PROB_FLOOR,
};
pub use network::{ConvNet, Gradients, Trace, PARAM_INIT_RANGE};
