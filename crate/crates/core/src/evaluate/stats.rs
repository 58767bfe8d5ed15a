use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Summary statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Description<S> {
    pub n: usize,
    pub mean: S,
    /// Sample standard deviation (n - 1 denominator).
    pub std: S,
    /// Sample variance, `std^2`.
    pub variance: S,
    pub min: S,
    pub q10: S,
    pub q25: S,
    pub median: S,
    pub q75: S,
    pub max: S,
    /// `m3 / m2^1.5` over central moments.
    pub skewness: S,
    /// Excess kurtosis, `m4 / m2^2 - 3`.
    pub kurtosis: S,
    /// Coefficient of variation, `std / mean`.
    pub std_over_mean: S,
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile_sorted<S: Scalar>(sorted: &[S], p: f64) -> S {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + S::lit(h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn describe<S: Scalar>(values: &[S]) -> Result<Description<S>> {
    match values.len() {
        0 => return Err(Error::invalid("cannot describe an empty sample")),
        1 => return Err(Error::invalid("standard deviation is undefined for a single value")),
        _ => {}
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sample contains non-finite values"));
    }
    let n = S::lit(values.len() as f64);
    let mean = values.iter().copied().sum::<S>() / n;
    let (mut m2, mut m3, mut m4) = (S::zero(), S::zero(), S::zero());
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 = m2 + d2;
        m3 = m3 + d2 * d;
        m4 = m4 + d2 * d2;
    }
    let variance = m2 / (n - S::one());
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let std = variance.sqrt();
    let (skewness, kurtosis) = if m2 > S::zero() {
        (m3 / m2.powf(S::lit(1.5)), m4 / (m2 * m2) - S::lit(3.0))
    } else {
        (S::zero(), S::zero())
    };

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(Description {
        n: values.len(),
        mean,
        std,
        variance,
        min: sorted[0],
        q10: quantile_sorted(&sorted, 0.10),
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.50),
        q75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        skewness,
        kurtosis,
        std_over_mean: std / mean,
    })
}
