use serde::Serialize;

use super::metrics::{evaluate, Metric};
use crate::error::{Error, Result};
use crate::ingest::Qrel;
use crate::retrieve::{fuse, rank, FusionConfig, MissingLocalPolicy, ScoreTable};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint<S> {
    pub alpha: S,
    pub value: S,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult<S> {
    pub metric: String,
    pub points: Vec<SweepPoint<S>>,
    pub best_alpha: S,
    pub best_value: S,
}

/// `0.0, 0.1, ..., 1.0`
pub fn default_grid<S: Scalar>() -> Vec<S> {
    (0..=10).map(|i| S::lit(i as f64 / 10.0)).collect()
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid<S: Scalar>(spec: &str) -> Result<Vec<S>> {
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("bad number {s:?} in grid {spec:?}")))
    };
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(Error::invalid(format!("range grid {spec:?} must be start:stop:step")));
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step.is_nan() || step <= 0.0 {
            return Err(Error::invalid("grid step must be positive"));
        }
        let n = ((stop - start) / step + 1e-9).floor();
        if n < 0.0 {
            return Err(Error::invalid(format!("empty grid {spec:?}")));
        }
        // Round to 12 decimals so 0.1 steps land on 0.3, not 0.30000000000000004.
        (0..=n as usize)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        spec.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<_>>()?
    };
    let grid: Vec<S> = grid.into_iter().map(S::lit).collect();
    validate_grid(&grid)?;
    Ok(grid)
}

fn validate_grid<S: Scalar>(grid: &[S]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("alpha grid is empty"));
    }
    if let Some(a) = grid.iter().find(|a| !(**a >= S::zero() && **a <= S::one())) {
        return Err(Error::invalid(format!("alpha {a} outside [0, 1]")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("alpha grid must be strictly increasing"));
    }
    Ok(())
}

/// Fuses, ranks and evaluates at every alpha of `grid`.
pub fn alpha_sweep<S: Scalar>(
    global: &ScoreTable<S>,
    local: &ScoreTable<S>,
    qrels: &[Qrel],
    grid: &[S],
    metric: Metric,
    top_k: usize,
    missing_local: MissingLocalPolicy,
) -> Result<SweepResult<S>> {
    validate_grid(grid)?;
    let mut points = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let config = FusionConfig::new(alpha, top_k, missing_local)?;
        let run = rank(&fuse(global, local, &config)?, "sweep");
        let value = evaluate::<S>(&run, qrels, metric).mean;
        points.push(SweepPoint { alpha, value });
    }
    // Ties go to the larger alpha.
    let best = points
        .iter()
        .fold(&points[0], |best, p| if p.value >= best.value { p } else { best });
    Ok(SweepResult {
        metric: metric.to_string(),
        best_alpha: best.alpha,
        best_value: best.value,
        points,
    })
}
