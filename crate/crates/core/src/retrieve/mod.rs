//! Global, local and fused scoring.

mod bm25;
mod dense;
mod fusion;
mod table;

pub use bm25::{bm25_scores, Bm25Index, Bm25Params};
pub use dense::{global_scores, local_scores};
pub use fusion::{fuse, FusionConfig, MissingLocalPolicy, CENSOR_OFFSET};
pub use table::{rank, ScoreTable};

/// Default candidate depth; matches Recall@1000 evaluation.
pub const DEFAULT_TOP_K: usize = 1000;
