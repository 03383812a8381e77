//! Learned auction built from per-bidder monotone max-min networks.
//!
//! Training uses a temperature softmax over transformed bids (plus a no-sale
//! slot) as a differentiable stand-in for the argmax; evaluation always goes
//! through [`clear_hard`].

pub mod checkpoint;
mod loss;
mod net;
mod train;

pub use checkpoint::{load_params, save_params, Checkpoint, Shape};
pub use loss::{grad, loss, loss_and_grad, routing, soft_revenue, Gradient, Routing};
pub use net::{allocate_soft, allocate_soft_with_reserve, clear_hard, payment_soft, MonotoneNet};
pub use train::{train, NetConfig, TrainingTrace, CONVERGENCE_WINDOW};
