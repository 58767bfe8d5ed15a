use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{write_file, RunEntry};
use crate::scalar::{by_score_desc_then_id, Scalar};

/// Sparse per-query scores. An absent passage means "no evidence", which is
/// different from a score of zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable<S> {
    rows: BTreeMap<String, BTreeMap<String, S>>,
}

impl<S: Scalar> ScoreTable<S> {
    pub fn new() -> Self {
        Self {
            rows: BTreeMap::new(),
        }
    }

    /// Sets a score; non-finite values are rejected.
    pub fn insert(&mut self, query_id: &str, passage_id: &str, score: S) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite score for ({query_id}, {passage_id})"
            )));
        }
        self.rows
            .entry(query_id.to_string())
            .or_default()
            .insert(passage_id.to_string(), score);
        Ok(())
    }

    /// Ensures a (possibly empty) row exists for `query_id`.
    pub fn touch(&mut self, query_id: &str) {
        self.rows.entry(query_id.to_string()).or_default();
    }

    pub(crate) fn set_row(&mut self, query_id: String, row: BTreeMap<String, S>) {
        self.rows.insert(query_id, row);
    }

    pub fn get(&self, query_id: &str, passage_id: &str) -> Option<S> {
        self.rows.get(query_id)?.get(passage_id).copied()
    }

    pub fn row(&self, query_id: &str) -> Option<&BTreeMap<String, S>> {
        self.rows.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, S>)> {
        self.rows.iter().map(|(q, r)| (q.as_str(), r))
    }

    pub fn num_queries(&self) -> usize {
        self.rows.len()
    }

    pub fn num_entries(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    /// Multiplies every score by `factor`.
    pub fn scaled(&self, factor: S) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|(q, row)| {
                    (
                        q.clone(),
                        row.iter().map(|(p, &s)| (p.clone(), s * factor)).collect(),
                    )
                })
                .collect(),
        }
    }

    /// One query's entries, descending score then ascending passage id.
    pub fn ranked(&self, query_id: &str) -> Vec<(&str, S)> {
        let mut list: Vec<(&str, S)> = self
            .rows
            .get(query_id)
            .map(|row| row.iter().map(|(p, &s)| (p.as_str(), s)).collect())
            .unwrap_or_default();
        list.sort_by(|a, b| by_score_desc_then_id(*a, *b));
        list
    }

    /// Rebuilds a table from a run (ranks are implied by the scores).
    pub fn from_run(entries: &[RunEntry]) -> Result<Self> {
        let mut table = Self::new();
        for e in entries {
            table.insert(&e.query_id, &e.passage_id, S::lit(e.score))?;
        }
        Ok(table)
    }

    /// TSV: `query_id<TAB>passage_id<TAB>score` with 9 decimals, queries in
    /// id order and entries in rank order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for q in self.rows.keys() {
            for (p, s) in self.ranked(q) {
                let _ = writeln!(out, "{q}\t{p}\t{:.9}", s.as_f64());
            }
        }
        out
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_tsv())
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table = Self::new();
        for (idx, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(path, idx + 1, "expected query_id, passage_id, score"));
            }
            let score: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad score {:?}", fields[2])))?;
            if table.get(fields[0], fields[1]).is_some() {
                return Err(Error::parse(path, idx + 1, "duplicate (query, passage) pair"));
            }
            table
                .insert(fields[0], fields[1], S::lit(score))
                .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        }
        Ok(table)
    }
}

/// Keeps the `k` best entries of an unordered score list (descending score,
/// ascending id on ties).
pub(crate) fn top_k<S: Scalar>(mut scored: Vec<(String, S)>, k: usize) -> BTreeMap<String, S> {
    let cmp = |a: &(String, S), b: &(String, S)| by_score_desc_then_id((&a.0, a.1), (&b.0, b.1));
    if scored.len() > k {
        if k > 0 {
            scored.select_nth_unstable_by(k - 1, cmp);
        }
        scored.truncate(k);
    }
    scored.into_iter().collect()
}

/// Ranks every query of a table into run entries (ranks 1..n).
pub fn rank<S: Scalar>(table: &ScoreTable<S>, tag: &str) -> Vec<RunEntry> {
    let mut out = Vec::with_capacity(table.num_entries());
    for q in table.query_ids() {
        for (i, (p, s)) in table.ranked(q).into_iter().enumerate() {
            out.push(RunEntry {
                query_id: q.to_string(),
                passage_id: p.to_string(),
                rank: i + 1,
                score: s.as_f64(),
                tag: tag.to_string(),
            });
        }
    }
    out
}
