//! Chunk-level local relevance for first-stage retrieval.
//!
//! Passages are split into coreference-resolved chunks, each chunk gets a
//! handful of pseudo-queries, and a query's local score for a passage is its
//! best similarity to any of those pseudo-queries. Local scores are fused
//! linearly with ordinary query-passage (global) scores.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod augment;
pub mod embed;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod pipeline;
pub mod retrieve;
mod scalar;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Vector store with `f64` arithmetic (vectors are kept at `f32` precision).
pub type Store = embed::VectorStore<f64>;
pub type Store32 = embed::VectorStore<f32>;
pub type Scores = retrieve::ScoreTable<f64>;
pub type Scores32 = retrieve::ScoreTable<f32>;
pub type Report = evaluate::MetricReport<f64>;
pub type Sweep = evaluate::SweepResult<f64>;
pub type Fusion = retrieve::FusionConfig<f64>;
