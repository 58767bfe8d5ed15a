use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::table::{top_k, ScoreTable};
use crate::error::{Error, Result};
use crate::ingest::{Passage, Query};
use crate::scalar::Scalar;
use crate::text::lexical_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k1.is_finite()) {
            return Err(Error::invalid(format!("BM25 k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::invalid(format!("BM25 b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// In-memory inverted index with Okapi BM25 scoring.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    ids: Vec<String>,
    doc_len: Vec<u32>,
    avg_len: f64,
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl Bm25Index {
    /// Indexes title and text of every passage.
    pub fn build(passages: &[Passage]) -> Result<Self> {
        if passages.is_empty() {
            return Err(Error::invalid("BM25 over an empty corpus"));
        }
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_len = Vec::with_capacity(passages.len());
        for (doc, p) in passages.iter().enumerate() {
            let mut tf: HashMap<String, u32> = HashMap::new();
            let mut len = 0u32;
            for tok in lexical_tokens(&p.encoding_text()) {
                *tf.entry(tok).or_default() += 1;
                len += 1;
            }
            doc_len.push(len);
            for (term, count) in tf {
                postings.entry(term).or_default().push((doc as u32, count));
            }
        }
        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        Ok(Self {
            ids: passages.iter().map(|p| p.id.clone()).collect(),
            avg_len: total as f64 / passages.len() as f64,
            doc_len,
            postings,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.ids.len()
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = self.postings.get(term).map_or(0, Vec::len) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Scores every document matching at least one query term. Repeated
    /// query terms contribute once per occurrence.
    pub fn score<S: Scalar>(&self, query: &str, params: Bm25Params) -> Vec<(String, S)> {
        let k1 = S::lit(params.k1);
        let b = S::lit(params.b);
        let avg = S::lit(self.avg_len.max(f64::MIN_POSITIVE));
        let mut acc: HashMap<u32, S> = HashMap::new();
        for term in lexical_tokens(query) {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            let idf = S::lit(self.idf(&term));
            for &(doc, tf) in list {
                let tf = S::lit(tf as f64);
                let len = S::lit(self.doc_len[doc as usize] as f64);
                let norm = k1 * (S::one() - b + b * len / avg);
                let term_score = idf * tf * (k1 + S::one()) / (tf + norm);
                let slot = acc.entry(doc).or_insert_with(S::zero);
                *slot = *slot + term_score;
            }
        }
        acc.into_iter()
            .map(|(doc, s)| (self.ids[doc as usize].clone(), s))
            .collect()
    }
}

/// BM25 retrieval of the `top_k` passages for every query.
pub fn bm25_scores<S: Scalar>(
    queries: &[Query],
    passages: &[Passage],
    params: Bm25Params,
    top_k_per_query: usize,
) -> Result<ScoreTable<S>> {
    params.validate()?;
    let index = Bm25Index::build(passages)?;
    let mut table = ScoreTable::new();
    for q in queries {
        let row = top_k(index.score::<S>(&q.text, params), top_k_per_query);
        table.set_row(q.id.clone(), row);
    }
    Ok(table)
}
