//! Multi-modal, multi-task survival and grade modelling.
//!
//! The crate is split along the pipeline:
//!
//! - [`numcore`]: matrices, activations, gradients, Adam, dropout, RNG streams
//! - [`genegraph`]: interaction edge lists and the self-looped adjacency mask
//! - [`netmodel`]: graph-masked layers and the model variants
//! - [`training`]: Cox and NLL losses, task schedules, the training loop
//! - [`surveval`]: C-index, Kaplan-Meier, risk tertiles, classification metrics
//! - [`datakit`]: cohorts, file formats, standardization, splits, synthetic data

pub mod datakit;
pub mod error;
pub mod genegraph;
pub mod netmodel;
pub mod numcore;
pub mod surveval;
pub mod training;

pub use error::{Error, Result};
