use std::collections::HashSet;

use serde::Serialize;

use crate::augment::{Chunk, PseudoQuery};
use crate::error::{Error, Result};
use crate::ingest::{Passage, Query};
use crate::text::word_count;

/// Length and expansion profile of an augmented collection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureStats {
    pub avg_query_len: f64,
    pub avg_passage_len: f64,
    /// Average passage length over average query length.
    pub len_ratio: f64,
    /// Chunks per passage.
    pub c_per_p: f64,
    /// Pseudo-queries per chunk.
    pub pq_per_c: f64,
    /// Pseudo-queries per passage.
    pub index_expansion_factor: f64,
}

pub fn structure_stats(
    corpus: &[Passage],
    queries: &[Query],
    chunks: &[Chunk],
    pseudo_queries: &[PseudoQuery],
) -> Result<StructureStats> {
    if corpus.is_empty() {
        return Err(Error::invalid("structure statistics need a non-empty corpus"));
    }
    if queries.is_empty() {
        return Err(Error::invalid("structure statistics need at least one query"));
    }
    let passage_ids: HashSet<&str> = corpus.iter().map(|p| p.id.as_str()).collect();
    if let Some(c) = chunks.iter().find(|c| !passage_ids.contains(c.passage_id.as_str())) {
        return Err(Error::Integrity(format!("chunk of unknown passage {:?}", c.passage_id)));
    }
    let avg_query_len =
        queries.iter().map(|q| word_count(&q.text)).sum::<usize>() as f64 / queries.len() as f64;
    let avg_passage_len =
        corpus.iter().map(|p| p.word_count).sum::<usize>() as f64 / corpus.len() as f64;
    let n_chunks = chunks.len() as f64;
    Ok(StructureStats {
        avg_query_len,
        avg_passage_len,
        len_ratio: avg_passage_len / avg_query_len,
        c_per_p: n_chunks / corpus.len() as f64,
        pq_per_c: if chunks.is_empty() { 0.0 } else { pseudo_queries.len() as f64 / n_chunks },
        index_expansion_factor: pseudo_queries.len() as f64 / corpus.len() as f64,
    })
}
