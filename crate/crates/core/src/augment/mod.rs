//! Semantic chunking with coreference resolution, and localized pseudo-query
//! generation, driven by a prompted text generator.

mod agent;
mod cost;
mod mock;
mod prompt;
mod sidecar;

pub use agent::{AgentConfig, HttpChatAgent, TextGenerator};
pub use cost::{estimate_cost, CorpusStats, CostEstimate, CostModel};
pub use mock::{mock_agent, mock_chunk_texts, mock_pseudo_queries, split_sentences, MockAgent};
pub use prompt::{
    extract_json_array, render_chunking_prompt, render_pseudo_query_prompt, PromptFamily,
    CHUNKING_TEMPLATE, PSEUDO_QUERY_TEMPLATE,
};
pub use sidecar::{
    load_chunks, load_pseudo_queries, ChunkRecord, PseudoQueryRecord, CHUNKS_FILE,
    PSEUDO_QUERIES_FILE,
};

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::ingest::Passage;
use crate::text::first_words;

/// Words used for a fallback chunk title when the passage has none.
const FALLBACK_TITLE_WORDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub passage_id: String,
    pub chunk_id: String,
    pub title: String,
    pub text: String,
    pub coref_resolved: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoQuery {
    pub id: String,
    pub passage_id: String,
    pub chunk_id: String,
    pub text: String,
}

impl PseudoQuery {
    pub fn make_id(passage_id: &str, chunk_id: &str, index: usize) -> String {
        format!("{passage_id}::{chunk_id}::{index}")
    }
}

/// Sequential chunk label: a, b, ..., z, aa, ab, ...
pub fn chunk_label(index: usize) -> String {
    let mut n = index + 1;
    let mut out = Vec::new();
    while n > 0 {
        n -= 1;
        out.push(b'a' + (n % 26) as u8);
        n /= 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// How a passage's chunks came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkOrigin {
    Agent,
    /// Over the word threshold; used whole without calling the agent.
    Skipped,
    /// The agent's reply never parsed; used whole.
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkingOutcome {
    pub chunks: Vec<Chunk>,
    pub origin: ChunkOrigin,
    pub agent_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub queries: Vec<PseudoQuery>,
    /// True when no reply parsed within the retry budget.
    pub failed: bool,
    pub agent_calls: usize,
}

fn whole_passage_chunk(passage: &Passage) -> Chunk {
    let title = passage
        .title
        .as_deref()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .unwrap_or_else(|| first_words(&passage.text, FALLBACK_TITLE_WORDS));
    Chunk {
        passage_id: passage.id.clone(),
        chunk_id: chunk_label(0),
        title,
        text: passage.text.trim().to_string(),
        coref_resolved: true,
    }
}

/// Calls the agent until `parse` accepts a reply. Transport errors that
/// outlast the retry budget are fatal; unparseable replies yield `None`.
fn call_with_retries<T>(
    prompt: &str,
    config: &AgentConfig,
    agent: &dyn TextGenerator,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<(Option<T>, usize)> {
    let attempts = config.max_retries + 1;
    for attempt in 1..=attempts {
        match agent.generate(prompt, config.temperature) {
            Ok(reply) => {
                if let Some(parsed) = parse(&reply) {
                    return Ok((Some(parsed), attempt));
                }
                log::debug!("unparseable agent reply on attempt {attempt}");
            }
            Err(message) if attempt == attempts => {
                return Err(Error::Transport { attempts, message });
            }
            Err(message) => log::warn!("agent call failed on attempt {attempt}: {message}"),
        }
    }
    Ok((None, attempts))
}

fn parse_chunks(reply: &str, passage_id: &str) -> Option<Vec<Chunk>> {
    let chunks: Vec<Chunk> = extract_json_array(reply)?
        .iter()
        .filter_map(|v| {
            let text = v.get("chunk_text")?.as_str()?.trim();
            if text.is_empty() {
                return None;
            }
            let title = v
                .get("chunk_title")
                .and_then(Value::as_str)
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .unwrap_or_else(|| first_words(text, FALLBACK_TITLE_WORDS));
            Some((title, text.to_string()))
        })
        .enumerate()
        .map(|(i, (title, text))| Chunk {
            passage_id: passage_id.to_string(),
            chunk_id: chunk_label(i),
            title,
            text,
            coref_resolved: true,
        })
        .collect();
    (!chunks.is_empty()).then_some(chunks)
}

/// Splits a passage into coreference-resolved chunks with one agent call
/// (plus retries). Passages longer than `config.skip_word_threshold` words,
/// and passages whose replies never parse, become a single whole-passage chunk.
pub fn chunk_and_resolve(
    passage: &Passage,
    config: &AgentConfig,
    agent: &dyn TextGenerator,
) -> Result<ChunkingOutcome> {
    if passage.text.trim().is_empty() {
        return Err(Error::invalid(format!("passage {:?} has empty text", passage.id)));
    }
    if passage.word_count > config.skip_word_threshold {
        return Ok(ChunkingOutcome {
            chunks: vec![whole_passage_chunk(passage)],
            origin: ChunkOrigin::Skipped,
            agent_calls: 0,
        });
    }
    let prompt = render_chunking_prompt(&passage.text);
    let (parsed, calls) = call_with_retries(&prompt, config, agent, |r| parse_chunks(r, &passage.id))?;
    Ok(match parsed {
        Some(chunks) => ChunkingOutcome {
            chunks,
            origin: ChunkOrigin::Agent,
            agent_calls: calls,
        },
        None => {
            log::warn!("chunking of {} fell back to the whole passage", passage.id);
            ChunkingOutcome {
                chunks: vec![whole_passage_chunk(passage)],
                origin: ChunkOrigin::Fallback,
                agent_calls: calls,
            }
        }
    })
}

fn parse_queries(reply: &str) -> Option<Vec<String>> {
    Some(
        extract_json_array(reply)?
            .iter()
            .filter_map(|v| v.get("pseudo_query")?.as_str().map(str::trim))
            .filter(|q| !q.is_empty())
            .map(str::to_string)
            .collect(),
    )
}

/// Generates pseudo-queries for one resolved chunk. An empty reply array is
/// a valid answer; an unparseable one yields no queries and `failed`.
pub fn generate_pseudo_queries(
    chunk: &Chunk,
    config: &AgentConfig,
    agent: &dyn TextGenerator,
) -> Result<QueryOutcome> {
    if !chunk.coref_resolved {
        return Err(Error::invalid(format!(
            "chunk {}/{} is not coreference-resolved",
            chunk.passage_id, chunk.chunk_id
        )));
    }
    let prompt = render_pseudo_query_prompt(&chunk.title, &chunk.text);
    let (parsed, calls) = call_with_retries(&prompt, config, agent, parse_queries)?;
    let failed = parsed.is_none();
    if failed {
        log::warn!("no pseudo-queries for {}/{}", chunk.passage_id, chunk.chunk_id);
    }
    let queries = parsed
        .unwrap_or_default()
        .into_iter()
        .enumerate()
        .map(|(i, text)| PseudoQuery {
            id: PseudoQuery::make_id(&chunk.passage_id, &chunk.chunk_id, i),
            passage_id: chunk.passage_id.clone(),
            chunk_id: chunk.chunk_id.clone(),
            text,
        })
        .collect();
    Ok(QueryOutcome {
        queries,
        failed,
        agent_calls: calls,
    })
}

/// Everything produced for one passage.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageAugmentation {
    pub passage_id: String,
    pub origin: ChunkOrigin,
    pub chunks: Vec<Chunk>,
    /// Per chunk, in chunk order: the pseudo-queries and whether generation failed.
    pub queries: Vec<(Vec<PseudoQuery>, bool)>,
}

pub fn augment_passage(
    passage: &Passage,
    config: &AgentConfig,
    agent: &dyn TextGenerator,
) -> Result<PassageAugmentation> {
    let chunking = chunk_and_resolve(passage, config, agent)?;
    let queries = chunking
        .chunks
        .iter()
        .map(|c| generate_pseudo_queries(c, config, agent).map(|o| (o.queries, o.failed)))
        .collect::<Result<_>>()?;
    Ok(PassageAugmentation {
        passage_id: passage.id.clone(),
        origin: chunking.origin,
        chunks: chunking.chunks,
        queries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AugmentStats {
    pub passages: usize,
    pub chunks: usize,
    pub pseudo_queries: usize,
    pub chunks_per_passage: f64,
    pub pseudo_queries_per_chunk: f64,
    pub skipped: usize,
    pub chunk_fallbacks: usize,
    pub query_fallbacks: usize,
}

impl AugmentStats {
    pub fn from_passages(items: &[PassageAugmentation]) -> Self {
        let chunks: usize = items.iter().map(|p| p.chunks.len()).sum();
        let pseudo_queries: usize = items
            .iter()
            .flat_map(|p| &p.queries)
            .map(|(q, _)| q.len())
            .sum();
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Self {
            passages: items.len(),
            chunks,
            pseudo_queries,
            chunks_per_passage: ratio(chunks, items.len()),
            pseudo_queries_per_chunk: ratio(pseudo_queries, chunks),
            skipped: items.iter().filter(|p| p.origin == ChunkOrigin::Skipped).count(),
            chunk_fallbacks: items.iter().filter(|p| p.origin == ChunkOrigin::Fallback).count(),
            query_fallbacks: items.iter().flat_map(|p| &p.queries).filter(|(_, f)| *f).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub chunks: Vec<Chunk>,
    pub pseudo_queries: Vec<PseudoQuery>,
    pub stats: AugmentStats,
}

/// Passages handed to the worker pool per sidecar append.
const PASSAGES_PER_FLUSH_PER_WORKER: usize = 8;

/// Augments every passage on a pool of `config.concurrency_limit` workers.
///
/// With a sidecar directory, passages already recorded there are reused, new
/// results are appended as they complete, and on success both sidecars are
/// rewritten in corpus order. Outputs are always in corpus order.
pub fn augment_corpus(
    corpus: &[Passage],
    config: &AgentConfig,
    agent: &dyn TextGenerator,
    sidecar_dir: Option<&Path>,
) -> Result<Augmentation> {
    config.validate()?;
    let mut done: HashMap<String, PassageAugmentation> = match sidecar_dir {
        Some(dir) => sidecar::load_completed(dir)?,
        None => HashMap::new(),
    };
    let pending: Vec<&Passage> = corpus.iter().filter(|p| !done.contains_key(&p.id)).collect();
    if !done.is_empty() {
        log::info!("resuming: {} passages already augmented", corpus.len() - pending.len());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.concurrency_limit)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    let mut writer = sidecar_dir.map(sidecar::Appender::open).transpose()?;
    for batch in pending.chunks(config.concurrency_limit * PASSAGES_PER_FLUSH_PER_WORKER) {
        let results: Vec<Result<PassageAugmentation>> = pool.install(|| {
            batch
                .par_iter()
                .map(|p| augment_passage(p, config, agent))
                .collect()
        });
        let mut first_error = None;
        for result in results {
            match result {
                Ok(item) => {
                    if let Some(w) = writer.as_mut() {
                        w.append(&item)?;
                    }
                    done.insert(item.passage_id.clone(), item);
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        if let Some(w) = writer.as_mut() {
            w.flush()?;
        }
        if let Some(e) = first_error {
            return Err(e);
        }
    }
    drop(writer);

    let ordered: Vec<PassageAugmentation> = corpus
        .iter()
        .filter_map(|p| done.remove(&p.id))
        .collect();
    if let Some(dir) = sidecar_dir {
        sidecar::rewrite(dir, &ordered)?;
    }
    let stats = AugmentStats::from_passages(&ordered);
    let mut chunks = Vec::with_capacity(stats.chunks);
    let mut pseudo_queries = Vec::with_capacity(stats.pseudo_queries);
    for item in ordered {
        chunks.extend(item.chunks);
        pseudo_queries.extend(item.queries.into_iter().flat_map(|(q, _)| q));
    }
    Ok(Augmentation {
        chunks,
        pseudo_queries,
        stats,
    })
}
