//! Seeded planted-needle benchmark.
//!
//! Query `i` is four invented needle words. Passage `i` holds one sentence
//! carrying all four of them among filler; its other sentences carry filler
//! plus one needle of a single decoy query each. The decoy passage of a query
//! therefore contains every needle word too, but spread over four sentences,
//! so a passage-level bag of words cannot tell the two apart while a
//! sentence-level one can.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Passage, Qrel, Query, Subset};

/// Frequent words shared by every passage.
const FILLER: [&str; 30] = [
    "system", "report", "data", "value", "process", "general", "common", "result", "level",
    "period", "group", "area", "number", "public", "service", "local", "market", "policy",
    "study", "program", "support", "review", "annual", "current", "standard", "various",
    "several", "related", "overall", "regional",
];
const CAPITALIZED: [&str; 6] = ["Recent", "Overall", "Several", "Various", "Current", "Regional"];
const SYLLABLES: [&str; 16] = [
    "ka", "zor", "vex", "lin", "tru", "mo", "quel", "pra", "dun", "sif", "gor", "bel", "nix",
    "tha", "wum", "ry",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub passages: usize,
    /// Sentences per passage; one holds the needles.
    pub sentences: usize,
    pub needle_words: usize,
    /// Sentence length range in words, inclusive.
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            passages: 200,
            sentences: 5,
            needle_words: 4,
            min_words: 32,
            max_words: 40,
            seed: 13,
        }
    }
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.passages < 2 {
            return Err(Error::invalid("planted benchmark needs at least 2 passages"));
        }
        if self.sentences < 2 || self.needle_words == 0 {
            return Err(Error::invalid("planted benchmark needs 2+ sentences and 1+ needle words"));
        }
        if self.sentences - 1 < self.needle_words {
            return Err(Error::invalid("not enough distractor sentences to hold a decoy's needles"));
        }
        if self.min_words <= self.needle_words || self.min_words > self.max_words {
            return Err(Error::invalid("bad sentence length range"));
        }
        Ok(())
    }
}

fn invent_words(n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let parts = rng.gen_range(3..=4);
        let word: String = (0..parts).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect();
        if seen.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

fn sentence(needles: &[&str], config: &PlantedConfig, rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(config.min_words..=config.max_words);
    let mut words: Vec<&str> = (1..len - needles.len())
        .map(|_| *FILLER.choose(rng).expect("non-empty"))
        .collect();
    for needle in needles {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, needle);
    }
    let mut text = CAPITALIZED.choose(rng).expect("non-empty").to_string();
    for w in words {
        text.push(' ');
        text.push_str(w);
    }
    text.push('.');
    text
}

/// One passage, query and relevance judgment per index.
pub fn planted_benchmark(config: &PlantedConfig) -> Result<Subset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.passages;
    let needles = invent_words(n * config.needle_words, &mut rng);
    let needles: Vec<Vec<&str>> = needles
        .chunks(config.needle_words)
        .map(|c| c.iter().map(String::as_str).collect())
        .collect();

    // Passage i hosts the scattered needles of query decoy_of[i] != i.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut decoy_of = vec![0; n];
    for w in 0..n {
        decoy_of[order[w]] = order[(w + 1) % n];
    }

    let width = (n - 1).to_string().len();
    let mut corpus = Vec::with_capacity(n);
    let mut queries = Vec::with_capacity(n);
    let mut qrels = Vec::with_capacity(n);
    for i in 0..n {
        let needle_at = rng.gen_range(0..config.sentences);
        let mut decoys = needles[decoy_of[i]].iter();
        let sentences: Vec<String> = (0..config.sentences)
            .map(|s| {
                if s == needle_at {
                    sentence(&needles[i], config, &mut rng)
                } else {
                    let carried: Vec<&str> = decoys.next().into_iter().copied().collect();
                    sentence(&carried, config, &mut rng)
                }
            })
            .collect();
        let pid = format!("p{i:0width$}");
        let qid = format!("q{i:0width$}");
        corpus.push(Passage::new(&pid, None, sentences.join(" ")));
        queries.push(Query::new(&qid, needles[i].join(" ")));
        qrels.push(Qrel {
            query_id: qid,
            passage_id: pid,
            relevance: 1,
        });
    }
    Ok(Subset {
        corpus,
        queries,
        qrels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::mock_chunk_texts;

    #[test]
    fn shape_and_determinism() {
        let config = PlantedConfig::default();
        let a = planted_benchmark(&config).unwrap();
        let b = planted_benchmark(&config).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.corpus.len(), 200);
        assert_eq!(a.queries.len(), 200);
        for p in &a.corpus {
            assert_eq!(mock_chunk_texts(&p.text).len(), 5);
        }
    }

    #[test]
    fn needles_sit_in_exactly_one_chunk_of_the_answer() {
        let bench = planted_benchmark(&PlantedConfig::default()).unwrap();
        for (q, p) in bench.queries.iter().zip(&bench.corpus) {
            let needles: Vec<&str> = q.text.split(' ').collect();
            let full = mock_chunk_texts(&p.text)
                .iter()
                .filter(|c| needles.iter().all(|n| c.split(' ').any(|w| w.trim_end_matches('.') == *n)))
                .count();
            assert_eq!(full, 1, "{}", q.id);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let config = PlantedConfig { sentences: 3, ..PlantedConfig::default() };
        assert!(planted_benchmark(&config).is_err());
    }
}
