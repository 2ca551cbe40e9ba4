//! Topic metrics for stance classification.
//!
//! Topic models (collapsed-Gibbs LDA, multiplicative-update NMF, and an
//! embedding + k-means + class-based TF-IDF cluster model), coherence scoring,
//! one-hot topic features, sentiment features, and cross-validated stance
//! classifiers, plus the comparison arithmetic used to report them.

pub mod classify;
pub mod cli;
pub mod coherence;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod features;
pub mod report;
pub mod seed;
pub mod synthetic;
pub mod topics;

pub use error::{Error, Result};
