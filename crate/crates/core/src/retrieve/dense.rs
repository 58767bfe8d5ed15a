use std::collections::HashMap;

use rayon::prelude::*;

use super::table::{top_k, ScoreTable};
use crate::augment::PseudoQuery;
use crate::embed::{store_similarity, VectorStore};
use crate::error::Result;
use crate::ingest::{Passage, Query};
use crate::scalar::Scalar;

fn require<'a, S: Scalar>(store: &'a VectorStore<S>, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    for id in ids {
        store.vector(id)?;
    }
    Ok(())
}

/// Direct query-passage similarity, `top_k` passages per query.
pub fn global_scores<S: Scalar>(
    queries: &[Query],
    passages: &[Passage],
    query_store: &VectorStore<S>,
    passage_store: &VectorStore<S>,
    top_k_per_query: usize,
) -> Result<ScoreTable<S>> {
    require(query_store, queries.iter().map(|q| q.id.as_str()))?;
    require(passage_store, passages.iter().map(|p| p.id.as_str()))?;
    let passage_vectors: Vec<(&str, &[S])> = passages
        .iter()
        .map(|p| (p.id.as_str(), passage_store.get(&p.id).expect("checked")))
        .collect();
    let (qn, pn) = (query_store.is_normalized(), passage_store.is_normalized());

    let rows: Vec<_> = queries
        .par_iter()
        .map(|q| -> Result<_> {
            let qv = query_store.get(&q.id).expect("checked");
            let scored = passage_vectors
                .iter()
                .map(|(pid, pv)| Ok((pid.to_string(), store_similarity(qv, qn, pv, pn)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((q.id.clone(), top_k(scored, top_k_per_query)))
        })
        .collect::<Result<_>>()?;

    let mut table = ScoreTable::new();
    for (qid, row) in rows {
        table.set_row(qid, row);
    }
    Ok(table)
}

/// Local relevance: for every passage, the maximum similarity between the
/// query and any pseudo-query whose parent is that passage. Passages without
/// pseudo-queries receive no entry.
pub fn local_scores<S: Scalar>(
    queries: &[Query],
    pseudo_queries: &[PseudoQuery],
    query_store: &VectorStore<S>,
    pseudo_store: &VectorStore<S>,
    top_k_per_query: usize,
) -> Result<ScoreTable<S>> {
    require(query_store, queries.iter().map(|q| q.id.as_str()))?;
    require(pseudo_store, pseudo_queries.iter().map(|p| p.id.as_str()))?;
    let pq_vectors: Vec<(&str, &[S])> = pseudo_queries
        .iter()
        .map(|pq| (pq.passage_id.as_str(), pseudo_store.get(&pq.id).expect("checked")))
        .collect();
    let (qn, pn) = (query_store.is_normalized(), pseudo_store.is_normalized());

    let rows: Vec<_> = queries
        .par_iter()
        .map(|q| -> Result<_> {
            let qv = query_store.get(&q.id).expect("checked");
            let mut best: HashMap<&str, S> = HashMap::new();
            for (parent, pv) in &pq_vectors {
                let s = store_similarity(qv, qn, pv, pn)?;
                best.entry(parent)
                    .and_modify(|cur| {
                        if s > *cur {
                            *cur = s
                        }
                    })
                    .or_insert(s);
            }
            let scored = best.into_iter().map(|(p, s)| (p.to_string(), s)).collect();
            Ok((q.id.clone(), top_k(scored, top_k_per_query)))
        })
        .collect::<Result<_>>()?;

    let mut table = ScoreTable::new();
    for (qid, row) in rows {
        table.set_row(qid, row);
    }
    Ok(table)
}
