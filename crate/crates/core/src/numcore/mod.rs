//! Dense `f64` matrices, activations, layer gradients, Adam, dropout and
//! seeded random streams.

mod activation;
mod adam;
mod dropout;
pub mod grad;
mod matrix;
mod rng;

pub use activation::{logsumexp, selu, sigmoid, Activation, SELU_ALPHA, SELU_LAMBDA};
pub use adam::{adam_step, AdamSlot, AdamState, LrSchedule, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use dropout::{alpha_dropout_affine, apply_dropout, dropout_mask, DropoutKind, DropoutRecord};
pub use matrix::Matrix;
pub use rng::RngStream;
