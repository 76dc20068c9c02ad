//! Model: embedding, quaternion linear/convolution layers, the
//! convolution-gated recurrence, bidirectional stacking, pooling head and
//! the output MLP, plus the real/quaternion reference cells used by the
//! bench command.

pub mod config;
pub mod layers;
pub mod params;
pub mod variants;

pub use config::ModelConfig;
pub use layers::{forward_ids, ForwardOut, LoadedParams};
pub use params::ModelParams;
