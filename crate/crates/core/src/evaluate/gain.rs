use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::stats::{describe, Description};
use crate::augment::PseudoQuery;
use crate::embed::{store_similarity, VectorStore};
use crate::error::Result;
use crate::ingest::{qrels_by_query, Qrel, Query};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRecord<S> {
    pub query_id: String,
    pub passage_id: String,
    pub best_pseudo_sim: S,
    pub passage_sim: S,
    pub gain: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainAnalysis<S> {
    pub records: Vec<GainRecord<S>>,
    /// Relevant pairs whose passage has no pseudo-queries.
    pub skipped: usize,
}

impl<S: Scalar> GainAnalysis<S> {
    pub fn gains(&self) -> Vec<S> {
        self.records.iter().map(|r| r.gain).collect()
    }

    /// Mean gain of each query over its relevant passages.
    pub fn per_query(&self) -> BTreeMap<&str, S> {
        let mut acc: BTreeMap<&str, (S, usize)> = BTreeMap::new();
        for r in &self.records {
            let slot = acc.entry(&r.query_id).or_insert((S::zero(), 0));
            slot.0 = slot.0 + r.gain;
            slot.1 += 1;
        }
        acc.into_iter()
            .map(|(q, (sum, n))| (q, sum / S::lit(n as f64)))
            .collect()
    }

    /// Share of queries whose mean gain is strictly positive.
    pub fn positive_query_fraction(&self) -> f64 {
        let per_query = self.per_query();
        if per_query.is_empty() {
            return 0.0;
        }
        per_query.values().filter(|g| **g > S::zero()).count() as f64 / per_query.len() as f64
    }

    pub fn describe(&self) -> Result<Description<S>> {
        describe(&self.gains())
    }
}

/// For every (query, relevant passage) pair: best pseudo-query similarity
/// minus direct passage similarity.
pub fn similarity_gain<S: Scalar>(
    queries: &[Query],
    qrels: &[Qrel],
    query_store: &VectorStore<S>,
    passage_store: &VectorStore<S>,
    pseudo_queries: &[PseudoQuery],
    pseudo_store: &VectorStore<S>,
) -> Result<GainAnalysis<S>> {
    let mut by_passage: HashMap<&str, Vec<&str>> = HashMap::new();
    for pq in pseudo_queries {
        by_passage.entry(&pq.passage_id).or_default().push(&pq.id);
    }
    let judged = qrels_by_query(qrels);
    let (qn, pn, sn) = (
        query_store.is_normalized(),
        passage_store.is_normalized(),
        pseudo_store.is_normalized(),
    );
    let mut records = Vec::new();
    let mut skipped = 0;
    for q in queries {
        let Some(rels) = judged.get(q.id.as_str()) else {
            continue;
        };
        let qv = query_store.vector(&q.id)?;
        for (&pid, _) in rels.iter().filter(|(_, &r)| r > 0) {
            let Some(pq_ids) = by_passage.get(pid) else {
                skipped += 1;
                continue;
            };
            let passage_sim = store_similarity(qv, qn, passage_store.vector(pid)?, pn)?;
            let mut best: Option<S> = None;
            for id in pq_ids {
                let s = store_similarity(qv, qn, pseudo_store.vector(id)?, sn)?;
                best = Some(best.map_or(s, |b| b.max(s)));
            }
            let best_pseudo_sim = best.expect("non-empty pseudo-query list");
            records.push(GainRecord {
                query_id: q.id.clone(),
                passage_id: pid.to_string(),
                best_pseudo_sim,
                passage_sim,
                gain: best_pseudo_sim - passage_sim,
            });
        }
    }
    Ok(GainAnalysis { records, skipped })
}
