//! Scalar abstraction shared by the scoring, fusion and evaluation code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Floating point type used for similarities, fused scores and metrics.
///
/// Implemented for `f32` and `f64`. Vectors are always stored at 32-bit
/// precision regardless of `S`, so `f64` scoring over a store loaded from disk
/// sees exactly the same values as the in-memory store it was saved from.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts a literal. Every finite `f64` is representable (possibly rounded) in `S`.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar fits f64")
    }

    /// Rounds through `f32`, the on-disk vector precision.
    #[inline]
    fn storage_round(self) -> Self {
        Self::lit(self.to_f32().expect("scalar fits f32") as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Descending score, ascending id. Scores must be finite.
#[inline]
pub(crate) fn by_score_desc_then_id<S: Scalar>(a: (&str, S), b: (&str, S)) -> std::cmp::Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then_with(|| a.0.cmp(b.0))
}
