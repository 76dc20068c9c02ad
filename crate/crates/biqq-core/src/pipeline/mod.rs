//! Data pipeline: text normalization, vocabulary, corpus IO and splits,
//! metrics, and the training/evaluation loops.

pub mod dataset;
pub mod evaluate;
pub mod metrics;
pub mod preprocess;
pub mod toy;
pub mod train;
pub mod vocab;

pub use dataset::Example;
pub use metrics::Metrics;
pub use vocab::Vocab;
