use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{qrels_by_query, Qrel, RunEntry};
use crate::scalar::Scalar;

/// Gain applied to a graded relevance label in DCG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GainForm {
    /// `2^rel - 1`
    #[default]
    Exponential,
    /// `rel`, as trec_eval's `ndcg_cut` computes it.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ndcg(usize),
    Mrr(usize),
    Recall(usize),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Mrr(k) => write!(f, "mrr@{k}"),
            Metric::Recall(k) => write!(f, "recall@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let (name, k) = lower
            .split_once('@')
            .ok_or_else(|| Error::invalid(format!("metric {s:?} needs a cutoff, e.g. ndcg@10")))?;
        let k: usize = k
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| Error::invalid(format!("bad cutoff in {s:?}")))?;
        match name {
            "ndcg" => Ok(Metric::Ndcg(k)),
            "mrr" => Ok(Metric::Mrr(k)),
            "recall" | "r" => Ok(Metric::Recall(k)),
            _ => Err(Error::invalid(format!("unknown metric {s:?}"))),
        }
    }
}

/// Per-query values and their macro-average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport<S> {
    pub metric: String,
    pub per_query: BTreeMap<String, S>,
    pub mean: S,
    /// Run queries left out: not judged, or without a relevant judgment.
    pub excluded: Vec<String>,
}

fn run_by_query(run: &[RunEntry]) -> BTreeMap<&str, Vec<&RunEntry>> {
    let mut map: BTreeMap<&str, Vec<&RunEntry>> = BTreeMap::new();
    for e in run {
        map.entry(&e.query_id).or_default().push(e);
    }
    for list in map.values_mut() {
        list.sort_by_key(|e| e.rank);
    }
    map
}

fn evaluate_with<S: Scalar>(
    run: &[RunEntry],
    qrels: &[Qrel],
    name: String,
    per_query: impl Fn(&[&RunEntry], &BTreeMap<&str, u32>) -> S,
) -> MetricReport<S> {
    let judged = qrels_by_query(qrels);
    let mut values = BTreeMap::new();
    let mut excluded = Vec::new();
    for (qid, ranked) in run_by_query(run) {
        match judged.get(qid) {
            Some(j) if j.values().any(|&r| r > 0) => {
                values.insert(qid.to_string(), per_query(&ranked, j));
            }
            _ => {
                log::warn!("query {qid} has no relevant judgments; excluded from {name}");
                excluded.push(qid.to_string());
            }
        }
    }
    let mean = if values.is_empty() {
        S::zero()
    } else {
        values.values().copied().sum::<S>() / S::lit(values.len() as f64)
    };
    MetricReport {
        metric: name,
        per_query: values,
        mean,
        excluded,
    }
}

fn gain<S: Scalar>(rel: u32, form: GainForm) -> S {
    match form {
        GainForm::Exponential => S::lit(2f64.powi(rel as i32) - 1.0),
        GainForm::Linear => S::lit(rel as f64),
    }
}

fn dcg<S: Scalar>(rels: impl Iterator<Item = u32>, form: GainForm) -> S {
    rels.enumerate()
        .map(|(i, rel)| gain::<S>(rel, form) / S::lit((i as f64 + 2.0).log2()))
        .sum()
}

pub fn ndcg_at_k_with<S: Scalar>(run: &[RunEntry], qrels: &[Qrel], k: usize, form: GainForm) -> MetricReport<S> {
    evaluate_with(run, qrels, Metric::Ndcg(k).to_string(), |ranked, judged| {
        let actual: S = dcg(
            ranked
                .iter()
                .take(k)
                .map(|e| judged.get(e.passage_id.as_str()).copied().unwrap_or(0)),
            form,
        );
        let mut ideal_rels: Vec<u32> = judged.values().copied().filter(|&r| r > 0).collect();
        ideal_rels.sort_unstable_by(|a, b| b.cmp(a));
        let ideal: S = dcg(ideal_rels.into_iter().take(k), form);
        actual / ideal
    })
}

/// nDCG@k with exponential gains.
pub fn ndcg_at_k<S: Scalar>(run: &[RunEntry], qrels: &[Qrel], k: usize) -> MetricReport<S> {
    ndcg_at_k_with(run, qrels, k, GainForm::Exponential)
}

pub fn mrr_at_k<S: Scalar>(run: &[RunEntry], qrels: &[Qrel], k: usize) -> MetricReport<S> {
    evaluate_with(run, qrels, Metric::Mrr(k).to_string(), |ranked, judged| {
        ranked
            .iter()
            .take(k)
            .position(|e| judged.get(e.passage_id.as_str()).is_some_and(|&r| r > 0))
            .map_or(S::zero(), |i| S::one() / S::lit(i as f64 + 1.0))
    })
}

pub fn recall_at_k<S: Scalar>(run: &[RunEntry], qrels: &[Qrel], k: usize) -> MetricReport<S> {
    evaluate_with(run, qrels, Metric::Recall(k).to_string(), |ranked, judged| {
        let relevant = judged.values().filter(|&&r| r > 0).count();
        let found = ranked
            .iter()
            .take(k)
            .filter(|e| judged.get(e.passage_id.as_str()).is_some_and(|&r| r > 0))
            .count();
        S::lit(found as f64) / S::lit(relevant as f64)
    })
}

pub fn evaluate<S: Scalar>(run: &[RunEntry], qrels: &[Qrel], metric: Metric) -> MetricReport<S> {
    match metric {
        Metric::Ndcg(k) => ndcg_at_k(run, qrels, k),
        Metric::Mrr(k) => mrr_at_k(run, qrels, k),
        Metric::Recall(k) => recall_at_k(run, qrels, k),
    }
}
