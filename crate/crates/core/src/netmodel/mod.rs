//! Layer types, the model variants and their checkpoints.

mod checkpoint;
mod layers;
mod network;

pub use checkpoint::{load_checkpoint, save_checkpoint, Manifest, ParamEntry};
pub use layers::{DenseLayer, DropoutSpec, MaskedSparseLayer, ParamId, Parameter};
pub use network::{ForwardTrace, Gradients, Heads, ModelInput, ModelOutput, Network, NetworkConfig, Variant};
