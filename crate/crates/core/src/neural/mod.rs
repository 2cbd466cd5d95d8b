//! From-scratch multi-label MLP policy: ReLU hidden layers, sigmoid
//! outputs, binary cross-entropy and Adam.

pub mod checkpoint;
pub mod decode;
pub mod features;
mod mlp;

pub use decode::decode_actions;
pub use features::{encode_state, RangeTable, FEATURE_LAYOUT_VERSION};
pub use mlp::{cross_entropy_loss, sigmoid, AdamConfig, Dense, Gradients, MlpModel, Workspace, PROB_CLIP};
