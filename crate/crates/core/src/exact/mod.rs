//! Globally optimal training of 2-ReLU networks at fixed input dimension.
//!
//! For fixed signs of the output weights and a fixed activation pattern, the loss is a
//! convex quadratic in the first-layer weights and `w0`. Minimizing over all realizable
//! patterns gives the global optimum.

mod pattern;
mod search;

pub use pattern::{
    build_subprogram, net_from_solution, normalize_theta, num_vars, solution_from_net, ActivationPattern,
    Region,
};
pub use search::{decide_trainability, train_exact, QpStats, Strategy, TrainConfig, TrainResult};
