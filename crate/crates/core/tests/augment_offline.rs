//! Augmentation with the mock agent: chunk coverage, id mapping, resume, and
//! hand-counted statistics on a fixed corpus.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use clapr_core::augment::{
    augment_corpus, mock_chunk_texts, split_sentences, AgentConfig, MockAgent, TextGenerator,
    CHUNKS_FILE, PSEUDO_QUERIES_FILE,
};
use clapr_core::evaluate::structure_stats;
use clapr_core::ingest::{Passage, Query};
use clapr_core::synthetic::{planted_benchmark, PlantedConfig};

/// `len` words; capitalized first word, full stop at the end.
fn sentence(len: usize, tag: &str) -> String {
    let mut words = vec![format!("Topic{tag}")];
    words.extend((1..len).map(|i| format!("w{i}")));
    words.join(" ") + "."
}

fn passage(id: &str, lengths: &[usize]) -> Passage {
    let text: Vec<String> = lengths.iter().enumerate().map(|(i, &n)| sentence(n, &format!("{id}s{i}"))).collect();
    Passage::new(id, None, text.join(" "))
}

/// (sentence lengths, mock chunk count). The mock packs whole sentences
/// greedily into chunks of at most 60 words; the last passage (160 words)
/// exceeds the 150-word threshold used below and is kept whole.
const FIXED: [(&[usize], usize); 20] = [
    (&[10], 1),
    (&[10, 10], 1),
    (&[30, 31], 2),
    (&[30, 30], 1),
    (&[40, 40, 40], 3),
    (&[20, 20, 20, 20], 2),
    (&[70], 1),
    (&[5, 70, 5], 3),
    (&[25, 25, 25, 25, 25], 3),
    (&[59, 1, 1], 2),
    (&[61], 1),
    (&[15, 15, 15, 15, 15], 2),
    (&[33, 33, 33], 3),
    (&[12], 1),
    (&[60, 60], 2),
    (&[1, 1, 1], 1),
    (&[45, 10, 10], 2),
    (&[8, 8, 8, 8, 8, 8, 8, 8], 2),
    (&[30, 29, 2], 2),
    (&[60, 60, 40], 1),
];

fn fixed_corpus() -> Vec<Passage> {
    FIXED.iter().enumerate().map(|(i, (lengths, _))| passage(&format!("p{:02}", i + 1), lengths)).collect()
}

fn config() -> AgentConfig {
    AgentConfig { skip_word_threshold: 150, concurrency_limit: 3, ..AgentConfig::default() }
}

#[test]
fn fixed_corpus_counts() {
    let corpus = fixed_corpus();
    let out = augment_corpus(&corpus, &config(), &MockAgent, None).unwrap();
    for (p, (_, expected)) in corpus.iter().zip(FIXED) {
        let n = out.chunks.iter().filter(|c| c.passage_id == p.id).count();
        assert_eq!(n, expected, "{}", p.id);
    }
    assert_eq!(out.stats.passages, 20);
    assert_eq!(out.stats.chunks, 36);
    assert_eq!(out.stats.pseudo_queries, 108);
    assert_eq!(out.stats.skipped, 1);
    assert_eq!(out.stats.chunk_fallbacks, 0);

    let total_words: usize = corpus.iter().map(|p| p.word_count).sum();
    assert_eq!(total_words, 1407);
    let queries = [Query::new("q1", "one two"), Query::new("q2", "one two three four")];
    let s = structure_stats(&corpus, &queries, &out.chunks, &out.pseudo_queries).unwrap();
    assert!((s.avg_passage_len - 70.35).abs() < 1e-12);
    assert_eq!(s.avg_query_len, 3.0);
    assert_eq!(s.c_per_p, 1.8);
    assert_eq!(s.pq_per_c, 3.0);
    assert!((s.index_expansion_factor - 5.4).abs() < 1e-12);
}

#[test]
fn mock_chunks_cover_every_sentence_once() {
    let mut corpus = fixed_corpus();
    corpus.extend(planted_benchmark(&PlantedConfig { passages: 30, ..PlantedConfig::default() }).unwrap().corpus);
    for p in &corpus {
        let sentences = split_sentences(&p.text);
        let chunks = mock_chunk_texts(&p.text);
        let rejoined: Vec<String> = chunks.iter().flat_map(|c| split_sentences(c)).collect();
        assert_eq!(rejoined, sentences, "{}", p.id);
    }
}

#[test]
fn coreference_replaces_only_leading_pronouns() {
    let text = "Honey bees make wax in large colonies. They store nectar there. It keeps for years.";
    let chunks = mock_chunk_texts(text);
    assert_eq!(
        chunks,
        vec!["Honey bees make wax in large colonies. Honey bees store nectar there. Honey bees keeps for years."]
    );
    let source: HashSet<&str> = text.split_whitespace().collect();
    let extra: Vec<&str> = chunks[0].split_whitespace().filter(|w| !source.contains(w)).collect();
    assert!(extra.is_empty(), "{extra:?}");
}

#[test]
fn every_pseudo_query_maps_to_one_existing_chunk() {
    let corpus = fixed_corpus();
    let out = augment_corpus(&corpus, &config(), &MockAgent, None).unwrap();
    let chunk_keys: HashSet<(&str, &str)> =
        out.chunks.iter().map(|c| (c.passage_id.as_str(), c.chunk_id.as_str())).collect();
    let mut ids = HashSet::new();
    for q in &out.pseudo_queries {
        assert!(chunk_keys.contains(&(q.passage_id.as_str(), q.chunk_id.as_str())), "{}", q.id);
        assert!(q.id.starts_with(&format!("{}::{}::", q.passage_id, q.chunk_id)));
        assert!(ids.insert(q.id.as_str()), "duplicate {}", q.id);
    }
}

/// Mock agent that starts failing after a call budget.
struct Interrupted {
    budget: AtomicUsize,
    calls: AtomicUsize,
}

impl Interrupted {
    fn new(budget: usize) -> Self {
        Self { budget: AtomicUsize::new(budget), calls: AtomicUsize::new(0) }
    }
}

impl TextGenerator for Interrupted {
    fn generate(&self, prompt: &str, temperature: f64) -> Result<String, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let left = self.budget.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |b| b.checked_sub(1));
        match left {
            Ok(_) => MockAgent.generate(prompt, temperature),
            Err(_) => Err("connection reset".into()),
        }
    }
}

fn sidecar_bytes(dir: &std::path::Path) -> (Vec<u8>, Vec<u8>) {
    (std::fs::read(dir.join(CHUNKS_FILE)).unwrap(), std::fs::read(dir.join(PSEUDO_QUERIES_FILE)).unwrap())
}

#[test]
fn resume_after_interruption_matches_a_clean_run() {
    let corpus = planted_benchmark(&PlantedConfig { passages: 60, ..PlantedConfig::default() }).unwrap().corpus;
    let cfg = AgentConfig { concurrency_limit: 2, ..AgentConfig::default() };

    let clean_dir = tempfile::tempdir().unwrap();
    let clean = augment_corpus(&corpus, &cfg, &MockAgent, Some(clean_dir.path())).unwrap();

    let dir = tempfile::tempdir().unwrap();
    // Each passage takes 1 chunking call and 5 pseudo-query calls.
    let flaky = Interrupted::new(150);
    assert!(augment_corpus(&corpus, &cfg, &flaky, Some(dir.path())).is_err());
    // Simulate a crash in the middle of a write.
    let mut chunks = std::fs::read(dir.path().join(CHUNKS_FILE)).unwrap();
    chunks.extend_from_slice(br#"{"passage_id":"p0"#);
    std::fs::write(dir.path().join(CHUNKS_FILE), chunks).unwrap();

    let counting = Interrupted::new(usize::MAX);
    let resumed = augment_corpus(&corpus, &cfg, &counting, Some(dir.path())).unwrap();
    assert_eq!(resumed, clean);
    assert_eq!(sidecar_bytes(dir.path()), sidecar_bytes(clean_dir.path()));
    let reused = corpus.len() - counting.calls.load(Ordering::SeqCst) / 6;
    assert!(reused >= 16, "only {reused} passages reused");
}

#[test]
fn half_then_full_matches_a_clean_run() {
    let corpus = planted_benchmark(&PlantedConfig { passages: 40, ..PlantedConfig::default() }).unwrap().corpus;
    let cfg = AgentConfig::default();
    let clean_dir = tempfile::tempdir().unwrap();
    let clean = augment_corpus(&corpus, &cfg, &MockAgent, Some(clean_dir.path())).unwrap();

    let dir = tempfile::tempdir().unwrap();
    augment_corpus(&corpus[..20], &cfg, &MockAgent, Some(dir.path())).unwrap();
    let counting = Interrupted::new(usize::MAX);
    let resumed = augment_corpus(&corpus, &cfg, &counting, Some(dir.path())).unwrap();
    assert_eq!(counting.calls.load(Ordering::SeqCst), 20 * 6);
    assert_eq!(resumed, clean);
    assert_eq!(sidecar_bytes(dir.path()), sidecar_bytes(clean_dir.path()));
}
