use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CLPV_MAGIC: &[u8; 4] = b"CLPV";
pub const CLPV_VERSION: u32 = 1;
/// magic (4) + version (4) + dim (4) + normalized flag (1) + record count (8).
pub const HEADER_LEN: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord<S> {
    pub id: String,
    pub vector: Vec<S>,
}

/// Id-keyed fixed-dimension vectors, kept at 32-bit precision.
///
/// Insertion order is preserved and is the order used by [`VectorStore::save`].
#[derive(Debug, Clone)]
pub struct VectorStore<S> {
    dim: usize,
    normalized: bool,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<S>,
}

impl<S: Scalar> PartialEq for VectorStore<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.normalized == other.normalized
            && self.ids == other.ids
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.as_f64().to_bits() == b.as_f64().to_bits())
    }
}

impl<S: Scalar> VectorStore<S> {
    pub fn new(dim: usize, normalized: bool) -> Result<Self> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(Error::invalid(format!("vector dimension {dim} out of range")));
        }
        Ok(Self {
            dim,
            normalized,
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    pub fn from_records(
        dim: usize,
        normalized: bool,
        records: impl IntoIterator<Item = EmbeddingRecord<S>>,
    ) -> Result<Self> {
        let mut store = Self::new(dim, normalized)?;
        for r in records {
            store.insert(r.id, r.vector)?;
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Adds a vector. Normalizing stores scale it to unit length first; every
    /// component is then rounded to `f32`.
    pub fn insert(&mut self, id: impl Into<String>, mut vector: Vec<S>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite component in vector {id:?}")));
        }
        if self.index.contains_key(&id) {
            return Err(Error::Integrity(format!("duplicate vector id {id:?}")));
        }
        if self.normalized {
            super::normalize(&mut vector).map_err(|_| Error::ZeroVector(Some(id.clone())))?;
        }
        self.data.extend(vector.into_iter().map(Scalar::storage_round));
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[S]> {
        self.index
            .get(id)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Like [`get`](Self::get) but a missing id is an error naming it.
    pub fn vector(&self, id: &str) -> Result<&[S]> {
        self.get(id).ok_or_else(|| Error::MissingEmbedding(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[S])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), &self.data[i * self.dim..(i + 1) * self.dim]))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let id_bytes: usize = self.ids.iter().map(|id| 4 + id.len()).sum();
        let mut out = Vec::with_capacity(HEADER_LEN + id_bytes + self.data.len() * 4);
        out.extend_from_slice(CLPV_MAGIC);
        out.extend_from_slice(&CLPV_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.push(self.normalized as u8);
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        for (id, vector) in self.iter() {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for x in vector {
                let v = x.to_f32().expect("stored value fits f32");
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != CLPV_MAGIC {
            return Err(Error::Format {
                offset: 0,
                message: format!("bad magic {magic:?}"),
            });
        }
        let version = r.u32("format version")?;
        if version != CLPV_VERSION {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported format version {version}"),
            });
        }
        let dim = r.u32("dim")? as usize;
        let flag_offset = r.pos as u64;
        let normalized = match r.take(1, "normalized flag")?[0] {
            0 => false,
            1 => true,
            other => {
                return Err(Error::Format {
                    offset: flag_offset,
                    message: format!("normalized flag must be 0 or 1, found {other}"),
                })
            }
        };
        let count = r.u64("record count")?;
        let mut store = Self::new(dim, normalized).map_err(|e| Error::Format {
            offset: 8,
            message: e.to_string(),
        })?;
        for _ in 0..count {
            let record_offset = r.pos as u64;
            let len = r.u32("id length")? as usize;
            let id = std::str::from_utf8(r.take(len, "id bytes")?)
                .map_err(|e| Error::Format {
                    offset: record_offset + 4,
                    message: format!("id is not utf-8: {e}"),
                })?
                .to_string();
            if store.index.contains_key(&id) {
                return Err(Error::Format {
                    offset: record_offset,
                    message: format!("duplicate id {id:?}"),
                });
            }
            let raw = r.take(dim * 4, "vector components")?;
            store.index.insert(id.clone(), store.ids.len());
            store.ids.push(id);
            store.data.extend(
                raw.chunks_exact(4)
                    .map(|c| S::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)),
            );
        }
        if r.pos != bytes.len() {
            return Err(Error::Format {
                offset: r.pos as u64,
                message: format!("{} trailing bytes", bytes.len() - r.pos),
            });
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos as u64,
                message: format!(
                    "truncated while reading {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}
