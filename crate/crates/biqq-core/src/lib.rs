//! Bidirectional quaternion quasi-recurrent text classifier: algebra,
//! gradient tape, model, objective, counterfactual pairing, augmentation
//! and the training/evaluation pipeline.

pub mod augment;
pub mod check;
pub mod checkpoint;
pub mod error;
pub mod fairness;
pub mod nn;
pub mod objective;
pub mod oracles;
pub mod par;
pub mod pipeline;
pub mod quat;
pub mod seeds;
pub mod tape;
pub mod tensor;

pub use error::{CoreError, Result};

/// Reserved vocabulary ids. The padding row of the embedding stays zero
/// and is never updated.
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const URL_ID: usize = 2;
pub const MENTION_ID: usize = 3;
