//! Deterministic stand-in for the LLM agents, used for offline runs and tests.
//!
//! Chunking replies split the passage at sentence boundaries (`.`, `!` or `?`
//! followed by whitespace and an uppercase letter), resolve sentence-initial
//! `It`/`They`/`This`/`These` to the passage's leading noun phrase, and pack
//! sentences greedily into chunks of at most [`MOCK_CHUNK_WORDS`] words, each
//! titled with its first [`MOCK_TITLE_WORDS`] words. Pseudo-query replies
//! hold exactly three templated questions.

use serde_json::json;

use super::agent::TextGenerator;
use super::prompt::{PromptFamily, TASK_MARKER};
use crate::error::{Error, Result};
use crate::text::first_words;

pub const MOCK_CHUNK_WORDS: usize = 60;
pub const MOCK_TITLE_WORDS: usize = 6;

const PRONOUNS: [&str; 4] = ["It", "They", "This", "These"];
const NOUN_PHRASE_MAX_WORDS: usize = 3;
const PHRASE_STOP_WORDS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "has", "have", "had", "do", "does", "did",
    "can", "could", "will", "would", "shall", "should", "may", "might", "must", "and", "or",
    "but", "of", "in", "on", "at", "to", "for", "with", "by", "from", "as", "that", "which",
    "who", "whose", "grow", "grows", "produce", "produces", "require", "requires", "include",
    "includes", "serve", "serves", "contain", "contains", "make", "makes", "provide",
    "provides", "use", "uses",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct MockAgent;

impl TextGenerator for MockAgent {
    fn generate(&self, prompt: &str, _temperature: f64) -> std::result::Result<String, String> {
        mock_agent(prompt).map_err(|e| e.to_string())
    }
}

/// Answers a rendered chunking or pseudo-query prompt.
pub fn mock_agent(prompt: &str) -> Result<String> {
    let task = prompt
        .rfind(TASK_MARKER)
        .map(|i| &prompt[i + TASK_MARKER.len()..]);
    match (PromptFamily::classify(prompt), task) {
        (Some(PromptFamily::Chunking), Some(task)) => {
            let passage = task
                .split_once("passage:")
                .map(|(_, p)| p.trim())
                .unwrap_or_default();
            Ok(mock_chunks_json(passage))
        }
        (Some(PromptFamily::PseudoQuery), Some(task)) => {
            let (title, chunk) = parse_title_chunk(task)
                .ok_or_else(|| Error::invalid("pseudo-query prompt without title/chunk"))?;
            Ok(json!(mock_pseudo_queries(title, chunk)
                .into_iter()
                .map(|q| json!({ "pseudo_query": q }))
                .collect::<Vec<_>>())
            .to_string())
        }
        _ => Err(Error::invalid("unrecognized prompt family")),
    }
}

fn parse_title_chunk(task: &str) -> Option<(&str, &str)> {
    let (_, rest) = task.split_once("title:")?;
    let (title, rest) = rest.split_once('\n')?;
    let (_, chunk) = rest.split_once("chunk:")?;
    Some((title.trim(), chunk.trim()))
}

/// Sentences with internal whitespace collapsed.
pub fn split_sentences(text: &str) -> Vec<String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for (i, w) in words.iter().enumerate() {
        current.push(w);
        let ends = w.ends_with(['.', '!', '?']);
        let next_upper = words
            .get(i + 1)
            .and_then(|n| n.chars().next())
            .is_some_and(char::is_uppercase);
        if ends && next_upper {
            sentences.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        sentences.push(current.join(" "));
    }
    sentences
}

/// Leading capitalized noun phrase of the first sentence, if any.
fn leading_noun_phrase(first_sentence: &str) -> Option<String> {
    let mut words = Vec::new();
    for (i, raw) in first_sentence.split_whitespace().enumerate() {
        let word = raw.trim_end_matches(|c: char| !c.is_alphanumeric());
        if i == 0 {
            let capitalized = word.chars().next().is_some_and(char::is_uppercase);
            if !capitalized || PRONOUNS.contains(&word) {
                return None;
            }
        } else if PHRASE_STOP_WORDS.contains(&word.to_lowercase().as_str()) {
            break;
        }
        if word.is_empty() {
            break;
        }
        words.push(word);
        if words.len() == NOUN_PHRASE_MAX_WORDS || word.len() != raw.len() {
            break;
        }
    }
    (!words.is_empty()).then(|| words.join(" "))
}

/// Replaces a sentence-initial pronoun with `antecedent`.
fn resolve(sentence: &str, antecedent: Option<&str>) -> String {
    let Some(antecedent) = antecedent else {
        return sentence.to_string();
    };
    match sentence.split_once(' ') {
        Some((head, tail)) if PRONOUNS.contains(&head) => format!("{antecedent} {tail}"),
        _ => sentence.to_string(),
    }
}

/// Chunk texts (already resolved) produced by the mock for a passage.
pub fn mock_chunk_texts(passage: &str) -> Vec<String> {
    let sentences = split_sentences(passage);
    let antecedent = sentences.first().and_then(|s| leading_noun_phrase(s));
    let mut chunks: Vec<String> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut current_words = 0usize;
    for (i, s) in sentences.iter().enumerate() {
        let s = if i == 0 { s.clone() } else { resolve(s, antecedent.as_deref()) };
        let n = s.split_whitespace().count();
        if !current.is_empty() && current_words + n > MOCK_CHUNK_WORDS {
            chunks.push(current.join(" "));
            current.clear();
            current_words = 0;
        }
        current_words += n;
        current.push(s);
    }
    if !current.is_empty() {
        chunks.push(current.join(" "));
    }
    chunks
}

fn mock_chunks_json(passage: &str) -> String {
    let items: Vec<_> = mock_chunk_texts(passage)
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            json!({
                "chunk_id": super::chunk_label(i),
                "chunk_title": first_words(&text, MOCK_TITLE_WORDS),
                "chunk_text": text,
            })
        })
        .collect();
    serde_json::Value::Array(items).to_string()
}

/// The three templated questions for a chunk.
pub fn mock_pseudo_queries(title: &str, chunk: &str) -> Vec<String> {
    let title = title.to_lowercase();
    let first = split_sentences(chunk).into_iter().next().unwrap_or_default();
    let first = first.trim_end_matches(['.', '!', '?']);
    vec![
        format!("what is {title}"),
        format!("is it true that {first}?"),
        format!("{title} explained"),
    ]
}
