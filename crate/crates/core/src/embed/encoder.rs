use std::hash::Hasher;
use std::time::Duration;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::store::EmbeddingRecord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::text::lexical_tokens;

/// Which side of the retrieval problem a text sits on. Sent to external
/// encoders that apply model-specific instruction prefixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderRole {
    Query,
    Passage,
}

/// Text-in, vectors-out. Implementations must be deterministic: equal texts
/// map to equal vectors.
pub trait Encoder: Sync {
    fn dim(&self) -> usize;

    fn encode(&self, texts: &[String], role: EncoderRole) -> std::result::Result<Vec<Vec<f64>>, String>;
}

/// Encodes `(id, text)` pairs in batches of `batch_size`, preserving order.
pub fn encode_batch<S: Scalar>(
    items: &[(String, String)],
    encoder: &dyn Encoder,
    role: EncoderRole,
    batch_size: usize,
    normalize: bool,
) -> Result<Vec<EmbeddingRecord<S>>> {
    let batch_size = batch_size.max(1);
    let dim = encoder.dim();
    let mut out = Vec::with_capacity(items.len());
    for (batch, chunk) in items.chunks(batch_size).enumerate() {
        let texts: Vec<String> = chunk.iter().map(|(_, t)| t.clone()).collect();
        let vectors = encoder
            .encode(&texts, role)
            .map_err(|message| Error::Encoder { batch, message })?;
        if vectors.len() != chunk.len() {
            return Err(Error::Encoder {
                batch,
                message: format!("expected {} vectors, received {}", chunk.len(), vectors.len()),
            });
        }
        for ((id, _), v) in chunk.iter().zip(vectors) {
            if v.len() != dim {
                return Err(Error::Encoder {
                    batch,
                    message: format!("vector for {id:?} has dim {}, declared {dim}", v.len()),
                });
            }
            let mut vector: Vec<S> = v.into_iter().map(S::lit).collect();
            if normalize {
                super::normalize(&mut vector).map_err(|_| Error::ZeroVector(Some(id.clone())))?;
            }
            out.push(EmbeddingRecord {
                id: id.clone(),
                vector,
            });
        }
    }
    Ok(out)
}

fn token_hash(token: &str, seed: u64) -> u64 {
    let mut hasher = FnvHasher::with_key(0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    hasher.write(token.as_bytes());
    // splitmix64 finalizer; raw FNV has weak high bits for short inputs
    let mut z = hasher.finish();
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded signed feature hashing over lowercase alphanumeric tokens,
/// L2-normalized. Word order does not matter.
pub fn hashing_vector<S: Scalar>(text: &str, dim: usize, seed: u64) -> Result<Vec<S>> {
    if dim < 8 {
        return Err(Error::invalid(format!("hashing encoder needs dim >= 8, got {dim}")));
    }
    let mut v = vec![0.0f64; dim];
    let mut tokens = 0usize;
    for token in lexical_tokens(text) {
        let h = token_hash(&token, seed);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % dim as u64) as usize] += sign;
        tokens += 1;
    }
    if tokens == 0 {
        return Err(Error::ZeroVector(Some(text.chars().take(40).collect())));
    }
    let mut v: Vec<S> = v.into_iter().map(S::lit).collect();
    super::normalize(&mut v).map_err(|_| Error::ZeroVector(Some(text.chars().take(40).collect())))?;
    Ok(v)
}

/// Offline deterministic encoder backed by [`hashing_vector`].
#[derive(Debug, Clone, Copy)]
pub struct HashingEncoder {
    pub dim: usize,
    pub seed: u64,
}

impl HashingEncoder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 8 {
            return Err(Error::invalid(format!("hashing encoder needs dim >= 8, got {dim}")));
        }
        Ok(Self { dim, seed })
    }
}

impl Encoder for HashingEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, texts: &[String], _role: EncoderRole) -> std::result::Result<Vec<Vec<f64>>, String> {
        texts
            .iter()
            .map(|t| hashing_vector::<f64>(t, self.dim, self.seed).map_err(|e| e.to_string()))
            .collect()
    }
}

#[derive(Serialize)]
struct EncodeRequest<'a> {
    texts: &'a [String],
    role: EncoderRole,
}

#[derive(Deserialize)]
struct EncodeResponse {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Client for an external encode server: `POST {"texts":[..],"role":..}`
/// answered by `{"dim":d,"vectors":[[..],..]}`.
pub struct HttpEncoder {
    url: String,
    dim: usize,
    agent: ureq::Agent,
}

impl HttpEncoder {
    pub fn new(url: impl Into<String>, dim: usize, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            url: url.into(),
            dim,
            agent,
        }
    }
}

impl Encoder for HttpEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, texts: &[String], role: EncoderRole) -> std::result::Result<Vec<Vec<f64>>, String> {
        let response: EncodeResponse = self
            .agent
            .post(&self.url)
            .send_json(EncodeRequest { texts, role })
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        if response.dim != self.dim {
            return Err(format!(
                "encoder reports dim {}, expected {}",
                response.dim, self.dim
            ));
        }
        Ok(response.vectors)
    }
}
