//! Metrics, similarity gain, statistics and the fusion-weight sweep.

mod gain;
mod metrics;
pub mod report;
mod stats;
mod structure;
mod sweep;

pub use gain::{similarity_gain, GainAnalysis, GainRecord};
pub use metrics::{evaluate, mrr_at_k, ndcg_at_k, ndcg_at_k_with, recall_at_k, GainForm, Metric, MetricReport};
pub use stats::{describe, quantile_sorted, Description};
pub use structure::{structure_stats, StructureStats};
pub use sweep::{alpha_sweep, default_grid, parse_grid, SweepPoint, SweepResult};
