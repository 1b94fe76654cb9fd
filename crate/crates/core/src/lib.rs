//! Check-worthiness estimation with structured information.
//!
//! Sentence embeddings from a language model are fused with embeddings of
//! (subject; predicate; object) triples extracted from the same sentence.
//! The crate covers the whole offline pipeline: corpus ingestion, triple
//! extraction and refinement, feature construction and caching, the fusion
//! network with analytic gradients and integrated-gradients attribution,
//! epoch-based training with macro-F1 model selection, and shared-task
//! metrics and report formats.

pub mod adapter;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod fusion;
pub mod pipeline;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
