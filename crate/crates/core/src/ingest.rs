//! BEIR-style corpus, query and qrels loading, TREC run files, and seeded
//! desk-scale subsets.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::word_count;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub title: Option<String>,
    pub text: String,
    pub word_count: usize,
}

impl Passage {
    pub fn new(id: impl Into<String>, title: Option<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            id: id.into(),
            title,
            word_count: word_count(&text),
            text,
        }
    }

    /// Title and text joined for encoding, BEIR style.
    pub fn encoding_text(&self) -> String {
        match self.title.as_deref().map(str::trim) {
            Some(title) if !title.is_empty() => format!("{title} {}", self.text),
            _ => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
}

impl Query {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrel {
    pub query_id: String,
    pub passage_id: String,
    pub relevance: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub query_id: String,
    pub passage_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

#[derive(Deserialize)]
struct BeirRecord {
    #[serde(rename = "_id")]
    id: String,
    #[serde(default)]
    title: Option<String>,
    text: String,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn beir_records(path: &Path) -> Result<Vec<BeirRecord>> {
    let content = read_to_string(path)?;
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: BeirRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        if record.id.is_empty() {
            return Err(Error::parse(path, idx + 1, "empty \"_id\""));
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::Integrity(format!(
                "duplicate id {:?} at {}:{}",
                record.id,
                path.display(),
                idx + 1
            )));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Passage>> {
    Ok(beir_records(path.as_ref())?
        .into_iter()
        .map(|r| Passage::new(r.id, r.title, r.text))
        .collect())
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let records = beir_records(path)?;
    if let Some(r) = records.iter().find(|r| r.text.trim().is_empty()) {
        return Err(Error::Integrity(format!("query {:?} has empty text", r.id)));
    }
    Ok(records.into_iter().map(|r| Query::new(r.id, r.text)).collect())
}

pub fn write_corpus(passages: &[Passage], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for p in passages {
        let mut obj = serde_json::Map::new();
        obj.insert("_id".into(), p.id.clone().into());
        if let Some(title) = &p.title {
            obj.insert("title".into(), title.clone().into());
        }
        obj.insert("text".into(), p.text.clone().into());
        out.push_str(&serde_json::Value::Object(obj).to_string());
        out.push('\n');
    }
    write_file(path.as_ref(), &out)
}

pub fn write_queries(queries: &[Query], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for q in queries {
        out.push_str(&serde_json::json!({"_id": q.id, "text": q.text}).to_string());
        out.push('\n');
    }
    write_file(path.as_ref(), &out)
}

pub fn load_qrels(path: impl AsRef<Path>) -> Result<Vec<Qrel>> {
    let path = path.as_ref();
    let content = read_to_string(path)?;
    let mut seen = HashSet::new();
    let mut qrels = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() || (idx == 0 && line.starts_with("query-id")) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                idx + 1,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let relevance: i64 = fields[2].trim().parse().map_err(|_| {
            Error::parse(path, idx + 1, format!("non-integer relevance {:?}", fields[2]))
        })?;
        if relevance < 0 {
            return Err(Error::parse(path, idx + 1, "negative relevance"));
        }
        let qrel = Qrel {
            query_id: fields[0].to_string(),
            passage_id: fields[1].to_string(),
            relevance: relevance as u32,
        };
        if !seen.insert((qrel.query_id.clone(), qrel.passage_id.clone())) {
            return Err(Error::Integrity(format!(
                "duplicate judgment ({}, {}) at line {}",
                qrel.query_id,
                qrel.passage_id,
                idx + 1
            )));
        }
        qrels.push(qrel);
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &[Qrel], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("query-id\tcorpus-id\tscore\n");
    for q in qrels {
        let _ = writeln!(out, "{}\t{}\t{}", q.query_id, q.passage_id, q.relevance);
    }
    write_file(path.as_ref(), &out)
}

/// Checks the per-query rank and score invariants of a run.
pub fn validate_run(entries: &[RunEntry]) -> Result<()> {
    let mut by_query: HashMap<&str, Vec<&RunEntry>> = HashMap::new();
    for e in entries {
        if e.query_id.is_empty() || e.passage_id.is_empty() || e.tag.is_empty() {
            return Err(Error::InvalidRun("empty identifier field".into()));
        }
        if [&e.query_id, &e.passage_id, &e.tag]
            .iter()
            .any(|s| s.chars().any(char::is_whitespace))
        {
            return Err(Error::InvalidRun(format!(
                "whitespace inside a field of {}/{}",
                e.query_id, e.passage_id
            )));
        }
        if !e.score.is_finite() {
            return Err(Error::InvalidRun(format!("non-finite score for {}", e.passage_id)));
        }
        by_query.entry(&e.query_id).or_default().push(e);
    }
    for (qid, mut list) in by_query {
        list.sort_by_key(|e| e.rank);
        let mut passages = HashSet::new();
        for (i, e) in list.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(Error::InvalidRun(format!(
                    "query {qid}: ranks must be 1..n without gaps, found rank {} at position {}",
                    e.rank,
                    i + 1
                )));
            }
            if !passages.insert(&e.passage_id) {
                return Err(Error::InvalidRun(format!(
                    "query {qid}: passage {} listed twice",
                    e.passage_id
                )));
            }
            if i > 0 && e.score > list[i - 1].score {
                return Err(Error::InvalidRun(format!(
                    "query {qid}: score increases at rank {}",
                    e.rank
                )));
            }
        }
    }
    Ok(())
}

/// Renders one run line: `query_id Q0 passage_id rank score tag`.
pub fn format_run_line(e: &RunEntry) -> String {
    format!("{} Q0 {} {} {:.6} {}", e.query_id, e.passage_id, e.rank, e.score, e.tag)
}

pub fn write_run(entries: &[RunEntry], path: impl AsRef<Path>) -> Result<()> {
    validate_run(entries)?;
    let mut out = String::new();
    for e in entries {
        out.push_str(&format_run_line(e));
        out.push('\n');
    }
    write_file(path.as_ref(), &out)
}

pub fn read_run(path: impl AsRef<Path>) -> Result<Vec<RunEntry>> {
    let path = path.as_ref();
    let content = read_to_string(path)?;
    let mut entries = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(path, idx + 1, "expected 6 whitespace-separated fields"));
        }
        let rank = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("bad rank {:?}", fields[3])))?;
        let score = fields[4]
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("bad score {:?}", fields[4])))?;
        entries.push(RunEntry {
            query_id: fields[0].to_string(),
            passage_id: fields[2].to_string(),
            rank,
            score,
            tag: fields[5].to_string(),
        });
    }
    Ok(entries)
}

pub(crate) fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

/// A seeded subset of a retrieval collection.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub corpus: Vec<Passage>,
    pub queries: Vec<Query>,
    pub qrels: Vec<Qrel>,
}

/// Samples `n_queries` judged queries and keeps every passage judged for them
/// plus `n_distractors` further seeded passages. Input order is preserved in
/// all three outputs.
pub fn subset(
    corpus: &[Passage],
    queries: &[Query],
    qrels: &[Qrel],
    n_queries: usize,
    n_distractors: usize,
    seed: u64,
) -> Result<Subset> {
    let corpus_ids: HashSet<&str> = corpus.iter().map(|p| p.id.as_str()).collect();
    let judged: BTreeSet<&str> = qrels
        .iter()
        .filter(|q| corpus_ids.contains(q.passage_id.as_str()))
        .map(|q| q.query_id.as_str())
        .collect();
    let mut candidates: Vec<&Query> = queries
        .iter()
        .filter(|q| judged.contains(q.id.as_str()))
        .collect();
    if n_queries > candidates.len() {
        return Err(Error::invalid(format!(
            "requested {n_queries} queries but only {} judged queries are available",
            candidates.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    let chosen: HashSet<&str> = candidates[..n_queries].iter().map(|q| q.id.as_str()).collect();

    let kept_qrels: Vec<Qrel> = qrels
        .iter()
        .filter(|q| chosen.contains(q.query_id.as_str()) && corpus_ids.contains(q.passage_id.as_str()))
        .cloned()
        .collect();
    let mut keep: HashSet<&str> = kept_qrels.iter().map(|q| q.passage_id.as_str()).collect();

    let mut pool: Vec<&str> = corpus
        .iter()
        .map(|p| p.id.as_str())
        .filter(|id| !keep.contains(id))
        .collect();
    pool.shuffle(&mut rng);
    keep.extend(pool.into_iter().take(n_distractors));

    Ok(Subset {
        corpus: corpus.iter().filter(|p| keep.contains(p.id.as_str())).cloned().collect(),
        queries: queries.iter().filter(|q| chosen.contains(q.id.as_str())).cloned().collect(),
        qrels: kept_qrels,
    })
}

/// Qrels grouped by query id.
pub fn qrels_by_query(qrels: &[Qrel]) -> BTreeMap<&str, BTreeMap<&str, u32>> {
    let mut map: BTreeMap<&str, BTreeMap<&str, u32>> = BTreeMap::new();
    for q in qrels {
        map.entry(&q.query_id).or_default().insert(&q.passage_id, q.relevance);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, content).unwrap();
        p
    }

    #[test]
    fn corpus_line_maps_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.jsonl", "{\"_id\":\"d1\",\"title\":\"T\",\"text\":\"a b c\"}\n");
        let corpus = load_corpus(&p).unwrap();
        assert_eq!(corpus, vec![Passage::new("d1", Some("T".into()), "a b c")]);
        assert_eq!(corpus[0].word_count, 3);
    }

    #[test]
    fn empty_files_are_empty_collections() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "e.jsonl", "");
        assert!(load_corpus(&p).unwrap().is_empty());
        assert!(load_queries(&p).unwrap().is_empty());
    }

    #[test]
    fn duplicate_ids_are_integrity_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "c.jsonl",
            "{\"_id\":\"d1\",\"text\":\"x\"}\n{\"_id\":\"d1\",\"text\":\"y\"}\n",
        );
        assert!(matches!(load_corpus(&p), Err(Error::Integrity(_))));
    }

    #[test]
    fn malformed_line_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "c.jsonl", "{\"_id\":\"d1\",\"text\":\"x\"}\n{oops\n");
        match load_corpus(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn queries_load_and_require_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "q.jsonl",
            "{\"_id\":\"q1\",\"text\":\"cost for heartworm treatment dogs\"}\n",
        );
        assert_eq!(
            load_queries(&p).unwrap(),
            vec![Query::new("q1", "cost for heartworm treatment dogs")]
        );
        let bad = write(&dir, "b.jsonl", "{\"_id\":\"q1\"}\n");
        assert!(matches!(load_queries(&bad), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn qrels_parse_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.tsv", "q1\td1\t1\n");
        assert_eq!(
            load_qrels(&p).unwrap(),
            vec![Qrel { query_id: "q1".into(), passage_id: "d1".into(), relevance: 1 }]
        );
        let h = write(&dir, "b.tsv", "query-id\tcorpus-id\tscore\nq1\td1\t2\n");
        assert_eq!(load_qrels(&h).unwrap().len(), 1);
        let bad = write(&dir, "c.tsv", "q1\td1\tx\n");
        assert!(matches!(load_qrels(&bad), Err(Error::Parse { line: 1, .. })));
    }

    fn entry(q: &str, d: &str, rank: usize, score: f64) -> RunEntry {
        RunEntry {
            query_id: q.into(),
            passage_id: d.into(),
            rank,
            score,
            tag: "clap".into(),
        }
    }

    #[test]
    fn run_line_format() {
        assert_eq!(format_run_line(&entry("q1", "d1", 1, 0.5)), "q1 Q0 d1 1 0.500000 clap");
    }

    #[test]
    fn run_with_rank_gap_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![entry("q1", "d1", 1, 0.9), entry("q1", "d2", 3, 0.8)];
        assert!(matches!(
            write_run(&entries, dir.path().join("r.trec")),
            Err(Error::InvalidRun(_))
        ));
        assert!(!dir.path().join("r.trec").exists());
    }

    #[test]
    fn run_with_increasing_score_is_refused() {
        let entries = vec![entry("q1", "d1", 1, 0.1), entry("q1", "d2", 2, 0.8)];
        assert!(validate_run(&entries).is_err());
    }

    #[test]
    fn subset_is_seeded_and_closed() {
        let corpus: Vec<Passage> = (0..50).map(|i| Passage::new(format!("d{i}"), None, "x y")).collect();
        let queries: Vec<Query> = (0..10).map(|i| Query::new(format!("q{i}"), "x")).collect();
        let qrels: Vec<Qrel> = (0..10)
            .flat_map(|i| {
                [i, i + 20].map(|d| Qrel {
                    query_id: format!("q{i}"),
                    passage_id: format!("d{d}"),
                    relevance: 1,
                })
            })
            .collect();
        let a = subset(&corpus, &queries, &qrels, 4, 5, 11).unwrap();
        let b = subset(&corpus, &queries, &qrels, 4, 5, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.queries.len(), 4);
        assert_eq!(a.corpus.len(), 8 + 5);
        let ids: HashSet<&str> = a.corpus.iter().map(|p| p.id.as_str()).collect();
        let qids: HashSet<&str> = a.queries.iter().map(|q| q.id.as_str()).collect();
        assert!(a
            .qrels
            .iter()
            .all(|q| ids.contains(q.passage_id.as_str()) && qids.contains(q.query_id.as_str())));

        let full = subset(&corpus, &queries, &qrels, 10, 0, 3).unwrap();
        assert_eq!(full.queries, queries);
        assert_eq!(full.qrels, qrels);
        assert!(subset(&corpus, &queries, &qrels, 11, 0, 3).is_err());
    }

    fn arb_run() -> impl Strategy<Value = Vec<RunEntry>> {
        prop::collection::vec(prop::collection::vec(-1_000_000i64..1_000_000, 1..8), 1..5).prop_map(
            |queries| {
                let mut out = Vec::new();
                for (qi, mut scores) in queries.into_iter().enumerate() {
                    scores.sort_unstable_by(|a, b| b.cmp(a));
                    for (i, s) in scores.into_iter().enumerate() {
                        out.push(RunEntry {
                            query_id: format!("q{qi}"),
                            passage_id: format!("d{i}"),
                            rank: i + 1,
                            score: s as f64 / 1e6,
                            tag: "run".into(),
                        });
                    }
                }
                out
            },
        )
    }

    proptest! {
        #[test]
        fn run_roundtrip(entries in arb_run()) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("run.trec");
            write_run(&entries, &path).unwrap();
            prop_assert_eq!(read_run(&path).unwrap(), entries);
        }
    }
}
