//! JSONL sidecars holding augmentation results, one object per chunk and
//! one per pseudo-query, in the field names of the prompt output schemas.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Chunk, ChunkOrigin, PassageAugmentation, PseudoQuery};
use crate::error::{Error, Result};

pub const CHUNKS_FILE: &str = "chunks.jsonl";
pub const PSEUDO_QUERIES_FILE: &str = "pseudo_queries.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub passage_id: String,
    pub chunk_id: String,
    pub chunk_title: String,
    pub chunk_text: String,
    pub coref_resolved: bool,
    pub origin: ChunkOrigin,
    /// Chunks of the parent passage; lets a resume detect partial writes.
    pub chunk_count: usize,
    /// Pseudo-queries recorded for this chunk.
    pub pq_count: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pq_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoQueryRecord {
    pub id: String,
    pub passage_id: String,
    pub chunk_id: String,
    pub pseudo_query: String,
}

impl From<ChunkRecord> for Chunk {
    fn from(r: ChunkRecord) -> Self {
        Chunk {
            passage_id: r.passage_id,
            chunk_id: r.chunk_id,
            title: r.chunk_title,
            text: r.chunk_text,
            coref_resolved: r.coref_resolved,
        }
    }
}

impl From<PseudoQueryRecord> for PseudoQuery {
    fn from(r: PseudoQueryRecord) -> Self {
        PseudoQuery {
            id: r.id,
            passage_id: r.passage_id,
            chunk_id: r.chunk_id,
            text: r.pseudo_query,
        }
    }
}

fn render(item: &PassageAugmentation) -> Result<(String, String)> {
    let mut chunks = String::new();
    let mut queries = String::new();
    for (chunk, (pqs, failed)) in item.chunks.iter().zip(&item.queries) {
        let record = ChunkRecord {
            passage_id: chunk.passage_id.clone(),
            chunk_id: chunk.chunk_id.clone(),
            chunk_title: chunk.title.clone(),
            chunk_text: chunk.text.clone(),
            coref_resolved: chunk.coref_resolved,
            origin: item.origin,
            chunk_count: item.chunks.len(),
            pq_count: pqs.len(),
            pq_failed: *failed,
        };
        chunks.push_str(&serde_json::to_string(&record)?);
        chunks.push('\n');
        for pq in pqs {
            let record = PseudoQueryRecord {
                id: pq.id.clone(),
                passage_id: pq.passage_id.clone(),
                chunk_id: pq.chunk_id.clone(),
                pseudo_query: pq.text.clone(),
            };
            queries.push_str(&serde_json::to_string(&record)?);
            queries.push('\n');
        }
    }
    Ok((chunks, queries))
}

pub(super) struct Appender {
    chunks: BufWriter<File>,
    queries: BufWriter<File>,
    dir: PathBuf,
}

impl Appender {
    pub(super) fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let open = |name: &str| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map(BufWriter::new)
                .map_err(|e| Error::io(path, e))
        };
        Ok(Self {
            chunks: open(CHUNKS_FILE)?,
            queries: open(PSEUDO_QUERIES_FILE)?,
            dir: dir.to_path_buf(),
        })
    }

    pub(super) fn append(&mut self, item: &PassageAugmentation) -> Result<()> {
        let (chunks, queries) = render(item)?;
        self.chunks
            .write_all(chunks.as_bytes())
            .map_err(|e| Error::io(self.dir.join(CHUNKS_FILE), e))?;
        self.queries
            .write_all(queries.as_bytes())
            .map_err(|e| Error::io(self.dir.join(PSEUDO_QUERIES_FILE), e))
    }

    pub(super) fn flush(&mut self) -> Result<()> {
        self.chunks
            .flush()
            .map_err(|e| Error::io(self.dir.join(CHUNKS_FILE), e))?;
        self.queries
            .flush()
            .map_err(|e| Error::io(self.dir.join(PSEUDO_QUERIES_FILE), e))
    }
}

/// Replaces both sidecars with `items`, in the given order.
pub(super) fn rewrite(dir: &Path, items: &[PassageAugmentation]) -> Result<()> {
    let mut chunks = String::new();
    let mut queries = String::new();
    for item in items {
        let (c, q) = render(item)?;
        chunks.push_str(&c);
        queries.push_str(&q);
    }
    for (name, content) in [(CHUNKS_FILE, chunks), (PSEUDO_QUERIES_FILE, queries)] {
        let tmp = dir.join(format!("{name}.tmp"));
        fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, dir.join(name)).map_err(|e| Error::io(dir.join(name), e))?;
    }
    Ok(())
}

/// Parses JSONL, ignoring an unparseable final line (an interrupted append).
fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path, tolerate_tail: bool) -> Result<Vec<T>> {
    let content = match fs::read_to_string(path) {
        Ok(c) => c,
        Err(e) if tolerate_tail && e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let lines: Vec<&str> = content.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(_) if tolerate_tail && idx + 1 == lines.len() && !content.ends_with('\n') => {}
            Err(e) => return Err(Error::parse(path, idx + 1, e.to_string())),
        }
    }
    Ok(out)
}

/// Passages whose records in `dir` are complete.
pub(super) fn load_completed(dir: &Path) -> Result<HashMap<String, PassageAugmentation>> {
    let chunk_records: Vec<ChunkRecord> = read_lines(&dir.join(CHUNKS_FILE), true)?;
    let query_records: Vec<PseudoQueryRecord> = read_lines(&dir.join(PSEUDO_QUERIES_FILE), true)?;

    let mut queries: HashMap<(String, String), Vec<PseudoQuery>> = HashMap::new();
    for r in query_records {
        queries
            .entry((r.passage_id.clone(), r.chunk_id.clone()))
            .or_default()
            .push(r.into());
    }
    let mut grouped: HashMap<String, Vec<ChunkRecord>> = HashMap::new();
    for r in chunk_records {
        grouped.entry(r.passage_id.clone()).or_default().push(r);
    }

    let mut done = HashMap::new();
    'passages: for (passage_id, records) in grouped {
        let expected = records[0].chunk_count;
        if records.len() != expected || records.iter().any(|r| r.chunk_count != expected) {
            continue;
        }
        let origin = records[0].origin;
        let mut item = PassageAugmentation {
            passage_id: passage_id.clone(),
            origin,
            chunks: Vec::with_capacity(expected),
            queries: Vec::with_capacity(expected),
        };
        for (i, r) in records.into_iter().enumerate() {
            if r.chunk_id != super::chunk_label(i) {
                continue 'passages;
            }
            let pqs = queries
                .remove(&(passage_id.clone(), r.chunk_id.clone()))
                .unwrap_or_default();
            if pqs.len() != r.pq_count {
                continue 'passages;
            }
            item.queries.push((pqs, r.pq_failed));
            item.chunks.push(r.into());
        }
        done.insert(passage_id, item);
    }
    Ok(done)
}

pub fn load_chunks(path: impl AsRef<Path>) -> Result<Vec<Chunk>> {
    Ok(read_lines::<ChunkRecord>(path.as_ref(), false)?
        .into_iter()
        .map(Chunk::from)
        .collect())
}

pub fn load_pseudo_queries(path: impl AsRef<Path>) -> Result<Vec<PseudoQuery>> {
    Ok(read_lines::<PseudoQueryRecord>(path.as_ref(), false)?
        .into_iter()
        .map(PseudoQuery::from)
        .collect())
}
