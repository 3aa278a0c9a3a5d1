//! Exact training, interpolation and hardness-reduction tools for shallow ReLU networks.

pub mod dataset;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod interp;
pub mod io;
pub mod network;
pub mod qp;
pub mod reduce;
pub mod synth;

pub use dataset::{Dataset, LabeledPoint};
pub use error::{Error, Result};
pub use network::{
    eval_k_relu, eval_two_relu, max_abs_error, relu, squared_loss, zero_loss_decision,
    AffineFunction, KReluNet, Network, ReluNode, Sign, TwoReluNet,
};
