//! Dense vectors: similarity, encoders and the on-disk vector store.

mod encoder;
mod store;

pub use encoder::{encode_batch, hashing_vector, Encoder, EncoderRole, HashingEncoder, HttpEncoder};
pub use store::{EmbeddingRecord, VectorStore, CLPV_MAGIC, CLPV_VERSION, HEADER_LEN};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Plain dot product, accumulated left to right.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn l2_norm<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

/// Cosine similarity. Errors on mismatched dimensions or a zero vector.
pub fn cosine<S: Scalar>(a: &[S], b: &[S]) -> Result<S> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == S::zero() || nb == S::zero() {
        return Err(Error::ZeroVector(None));
    }
    let c = dot(a, b) / (na * nb);
    Ok(c.max(-S::one()).min(S::one()))
}

/// Scales `v` to unit length in place.
pub fn normalize<S: Scalar>(v: &mut [S]) -> Result<()> {
    let n = l2_norm(v);
    if n == S::zero() || !n.is_finite() {
        return Err(Error::ZeroVector(None));
    }
    v.iter_mut().for_each(|x| *x = *x / n);
    Ok(())
}

/// Similarity between two stored vectors; a dot product when both stores are
/// normalized, full cosine otherwise.
#[inline]
pub fn store_similarity<S: Scalar>(
    a: &[S],
    a_normalized: bool,
    b: &[S],
    b_normalized: bool,
) -> Result<S> {
    if a_normalized && b_normalized {
        Ok(dot(a, b))
    } else {
        cosine(a, b)
    }
}
