mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Chunk-level local relevance for first-stage retrieval.
#[derive(Debug, Parser)]
#[command(name = "clapr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chunk passages, resolve coreference and generate pseudo-queries.
    Augment(AugmentArgs),
    /// Encode a corpus, query set or pseudo-query sidecar into a vector store.
    Embed(EmbedArgs),
    /// Query-passage scores (dense or BM25) as a score table.
    ScoreGlobal(ScoreGlobalArgs),
    /// Max query/pseudo-query similarity per passage as a score table.
    ScoreLocal(ScoreLocalArgs),
    /// Interpolate global and local score tables into a run file.
    Fuse(FuseArgs),
    /// Evaluate a run against qrels.
    Eval(EvalArgs),
    /// Evaluate fusion over a grid of alpha values.
    Sweep(SweepArgs),
    /// Best pseudo-query similarity minus passage similarity per relevant pair.
    Gain(GainArgs),
    /// Length and expansion statistics of an augmented collection.
    Stats(StatsArgs),
    /// Token and cost estimate for augmenting a corpus.
    Cost(CostArgs),
    /// Seeded query/corpus subset of a collection.
    Subset(SubsetArgs),
    /// Write the synthetic planted-needle benchmark.
    Planted(PlantedArgs),
    /// Offline end to end: augment, embed, score, sweep, fuse, evaluate, gain.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    /// Deterministic offline stand-in.
    Mock,
    /// OpenAI-compatible chat-completion endpoint.
    Http,
}

#[derive(Debug, Args, Serialize)]
pub struct AgentOpts {
    #[arg(long, value_enum, default_value = "mock")]
    pub agent: AgentKind,
    #[arg(long, default_value = "http://127.0.0.1:8000/v1/chat/completions")]
    pub endpoint: String,
    #[arg(long, default_value = "mistral-large-2411")]
    pub model: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "LLM_API_KEY")]
    pub api_key_env: String,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 2)]
    pub max_retries: usize,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Passages longer than this many words are kept whole.
    #[arg(long, default_value_t = 5000)]
    pub skip_words: usize,
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct AugmentArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory for chunks.jsonl and pseudo_queries.jsonl; existing sidecars are resumed.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub agent: AgentOpts,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedKind {
    Corpus,
    Queries,
    PseudoQueries,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Seeded feature hashing, offline.
    Hashing,
    /// External encode server.
    Http,
}

#[derive(Debug, Args, Serialize)]
pub struct EncoderOpts {
    #[arg(long, value_enum, default_value = "hashing")]
    pub encoder: EncoderKind,
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    /// Hashing encoder seed.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "http://127.0.0.1:8080/encode")]
    pub url: String,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    /// BEIR JSONL (corpus or queries) or a pseudo_queries.jsonl sidecar.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: EmbedKind,
    /// Output vector store (CLPV).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub encoder: EncoderOpts,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scorer {
    Dense,
    Bm25,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreGlobalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value = "dense")]
    pub scorer: Scorer,
    /// Query vectors (dense only).
    #[arg(long, required_if_eq("scorer", "dense"))]
    pub query_vectors: Option<PathBuf>,
    /// Passage vectors (dense only).
    #[arg(long, required_if_eq("scorer", "dense"))]
    pub passage_vectors: Option<PathBuf>,
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    /// Output score table (TSV).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreLocalArgs {
    #[arg(long)]
    pub queries: PathBuf,
    /// pseudo_queries.jsonl sidecar.
    #[arg(long)]
    pub pseudo_queries: PathBuf,
    #[arg(long)]
    pub query_vectors: PathBuf,
    #[arg(long)]
    pub pseudo_vectors: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingLocal {
    #[value(name = "use_global", alias = "use-global")]
    UseGlobal,
    Drop,
}

#[derive(Debug, Args, Serialize)]
pub struct FusionOpts {
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value = "use_global")]
    pub missing_local: MissingLocal,
}

#[derive(Debug, Args, Serialize)]
pub struct FuseArgs {
    #[arg(long)]
    pub global: PathBuf,
    #[arg(long)]
    pub local: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub fusion: FusionOpts,
    #[arg(long, default_value = "clapr")]
    pub tag: String,
    /// Output run file (TREC format).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainFormArg {
    Exponential,
    Linear,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Comma-separated, e.g. ndcg@10,mrr@10,recall@1000.
    #[arg(long, default_value = "ndcg@10,mrr@10,recall@1000")]
    pub metrics: String,
    /// nDCG gain form.
    #[arg(long, value_enum, default_value = "exponential")]
    pub gain: GainFormArg,
    /// JSON report; the text table always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub global: PathBuf,
    #[arg(long)]
    pub local: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// start:stop:step or a comma-separated list.
    #[arg(long, default_value = "0:1:0.1")]
    pub grid: String,
    #[arg(long, default_value = "ndcg@10")]
    pub metric: String,
    #[command(flatten)]
    pub fusion: FusionOpts,
    /// JSON sweep result.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct GainArgs {
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long)]
    pub pseudo_queries: PathBuf,
    #[arg(long)]
    pub query_vectors: PathBuf,
    #[arg(long)]
    pub passage_vectors: PathBuf,
    #[arg(long)]
    pub pseudo_vectors: PathBuf,
    /// JSON with per-pair gains and their description.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub cdf_svg: Option<PathBuf>,
    #[arg(long)]
    pub box_svg: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    /// chunks.jsonl sidecar.
    #[arg(long)]
    pub chunks: PathBuf,
    /// pseudo_queries.jsonl sidecar.
    #[arg(long)]
    pub pseudo_queries: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CostArgs {
    #[arg(long)]
    pub passages: u64,
    #[arg(long)]
    pub avg_tokens: u64,
    #[arg(long)]
    pub avg_chunks: u64,
    /// Price per input token.
    #[arg(long, default_value_t = 2e-6)]
    pub input_price: f64,
    /// Price per output token.
    #[arg(long, default_value_t = 6e-6)]
    pub output_price: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SubsetArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long)]
    pub n_queries: usize,
    /// Extra unjudged passages to keep.
    #[arg(long, default_value_t = 0)]
    pub n_distractors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Receives corpus.jsonl, queries.jsonl and qrels.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PlantedArgs {
    #[arg(long, default_value_t = 200)]
    pub passages: usize,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    /// Receives corpus.jsonl, queries.jsonl and qrels.tsv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// Holds corpus.jsonl, queries.jsonl and qrels.tsv.
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    #[arg(long, default_value = "0:1:0.1")]
    pub grid: String,
    #[arg(long, default_value = "ndcg@10")]
    pub metric: String,
    #[command(flatten)]
    pub fusion: FusionOpts,
}

/// Bad flags or missing inputs: exit code 1.
#[derive(Debug)]
pub struct Validation(pub String);

impl std::fmt::Display for Validation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|e| {
        e.is::<Validation>() || matches!(e.downcast_ref::<clapr_core::Error>(), Some(clapr_core::Error::InvalidArgument(_)))
    });
    if validation {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
