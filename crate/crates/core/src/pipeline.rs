//! End-to-end run over a benchmark: augment, embed, score, sweep, gain.

use crate::augment::{augment_corpus, AgentConfig, Augmentation, PseudoQuery, TextGenerator};
use crate::embed::{encode_batch, Encoder, EncoderRole, VectorStore};
use crate::error::Result;
use crate::evaluate::{alpha_sweep, evaluate, similarity_gain, GainAnalysis, Metric, MetricReport, SweepResult};
use crate::ingest::{Passage, Query, Subset};
use crate::retrieve::{fuse, global_scores, local_scores, rank, FusionConfig, MissingLocalPolicy, ScoreTable};
use crate::scalar::Scalar;

pub fn embed_passages<S: Scalar>(
    passages: &[Passage],
    encoder: &dyn Encoder,
    batch_size: usize,
) -> Result<VectorStore<S>> {
    let items: Vec<(String, String)> = passages.iter().map(|p| (p.id.clone(), p.encoding_text())).collect();
    let records = encode_batch(&items, encoder, EncoderRole::Passage, batch_size, true)?;
    VectorStore::from_records(encoder.dim(), true, records)
}

pub fn embed_queries<S: Scalar>(queries: &[Query], encoder: &dyn Encoder, batch_size: usize) -> Result<VectorStore<S>> {
    let items: Vec<(String, String)> = queries.iter().map(|q| (q.id.clone(), q.text.clone())).collect();
    let records = encode_batch(&items, encoder, EncoderRole::Query, batch_size, true)?;
    VectorStore::from_records(encoder.dim(), true, records)
}

/// Pseudo-queries are questions, so they use the query role.
pub fn embed_pseudo_queries<S: Scalar>(
    pseudo_queries: &[PseudoQuery],
    encoder: &dyn Encoder,
    batch_size: usize,
) -> Result<VectorStore<S>> {
    let items: Vec<(String, String)> = pseudo_queries.iter().map(|q| (q.id.clone(), q.text.clone())).collect();
    let records = encode_batch(&items, encoder, EncoderRole::Query, batch_size, true)?;
    VectorStore::from_records(encoder.dim(), true, records)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig<S> {
    pub agent: AgentConfig,
    pub batch_size: usize,
    pub top_k: usize,
    pub metric: Metric,
    pub grid: Vec<S>,
    pub missing_local: MissingLocalPolicy,
}

impl<S: Scalar> Default for PipelineConfig<S> {
    fn default() -> Self {
        Self {
            agent: AgentConfig::default(),
            batch_size: 64,
            top_k: crate::retrieve::DEFAULT_TOP_K,
            metric: Metric::Ndcg(10),
            grid: crate::evaluate::default_grid(),
            missing_local: MissingLocalPolicy::UseGlobal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput<S> {
    pub augmentation: Augmentation,
    pub global: ScoreTable<S>,
    pub local: ScoreTable<S>,
    pub global_report: MetricReport<S>,
    pub sweep: SweepResult<S>,
    /// Fused scores at the best alpha of the sweep.
    pub fused: ScoreTable<S>,
    pub gain: GainAnalysis<S>,
}

pub fn run_pipeline<S: Scalar>(
    bench: &Subset,
    agent: &dyn TextGenerator,
    encoder: &dyn Encoder,
    config: &PipelineConfig<S>,
) -> Result<PipelineOutput<S>> {
    let augmentation = augment_corpus(&bench.corpus, &config.agent, agent, None)?;
    let passage_store = embed_passages::<S>(&bench.corpus, encoder, config.batch_size)?;
    let query_store = embed_queries::<S>(&bench.queries, encoder, config.batch_size)?;
    let pseudo_store = embed_pseudo_queries::<S>(&augmentation.pseudo_queries, encoder, config.batch_size)?;

    let global = global_scores(&bench.queries, &bench.corpus, &query_store, &passage_store, config.top_k)?;
    let local = local_scores(
        &bench.queries,
        &augmentation.pseudo_queries,
        &query_store,
        &pseudo_store,
        config.top_k,
    )?;
    let global_report = evaluate(&rank(&global, "global"), &bench.qrels, config.metric);
    let sweep = alpha_sweep(
        &global,
        &local,
        &bench.qrels,
        &config.grid,
        config.metric,
        config.top_k,
        config.missing_local,
    )?;
    let fused = fuse(
        &global,
        &local,
        &FusionConfig::new(sweep.best_alpha, config.top_k, config.missing_local)?,
    )?;
    let gain = similarity_gain(
        &bench.queries,
        &bench.qrels,
        &query_store,
        &passage_store,
        &augmentation.pseudo_queries,
        &pseudo_store,
    )?;
    Ok(PipelineOutput {
        augmentation,
        global,
        local,
        global_report,
        sweep,
        fused,
        gain,
    })
}
