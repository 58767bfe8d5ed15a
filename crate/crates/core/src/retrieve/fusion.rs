use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::table::{top_k, ScoreTable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gap between the lowest retained global score and the stand-in for a
/// global score outside the retained top-k, relative to the largest retained
/// magnitude. Relative so that scaling both tables scales the floor too.
pub const CENSOR_OFFSET: f64 = 1e-6;

/// What a passage without a local score contributes on the local side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingLocalPolicy {
    /// The passage's own global score.
    #[default]
    UseGlobal,
    /// The censored global floor of the query.
    Drop,
}

impl std::str::FromStr for MissingLocalPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "use_global" | "use-global" => Ok(Self::UseGlobal),
            "drop" => Ok(Self::Drop),
            other => Err(Error::invalid(format!(
                "unknown missing-local policy {other:?} (expected use_global or drop)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig<S> {
    pub alpha: S,
    pub top_k: usize,
    pub missing_local: MissingLocalPolicy,
}

impl<S: Scalar> FusionConfig<S> {
    pub fn new(alpha: S, top_k: usize, missing_local: MissingLocalPolicy) -> Result<Self> {
        let cfg = Self {
            alpha,
            top_k,
            missing_local,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= S::zero() && self.alpha <= S::one()) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.top_k == 0 {
            return Err(Error::invalid("top_k must be at least 1"));
        }
        Ok(())
    }
}

/// `alpha * global + (1 - alpha) * local` over the union of each query's
/// global and local candidates.
///
/// A passage missing from the global table gets the query's censored floor:
/// the lowest retained global score minus [`CENSOR_OFFSET`] times the largest
/// retained absolute score (the local row stands in when the query has no
/// global row). A passage missing from the local table follows
/// `config.missing_local`.
pub fn fuse<S: Scalar>(
    global: &ScoreTable<S>,
    local: &ScoreTable<S>,
    config: &FusionConfig<S>,
) -> Result<ScoreTable<S>> {
    config.validate()?;
    let alpha = config.alpha;
    let beta = S::one() - alpha;
    let offset = S::lit(CENSOR_OFFSET);

    let queries: BTreeSet<&str> = global.query_ids().chain(local.query_ids()).collect();
    let mut fused = ScoreTable::new();
    for q in queries {
        let g_row = global.row(q).filter(|r| !r.is_empty());
        let l_row = local.row(q).filter(|r| !r.is_empty());
        let floor_source = g_row.or(l_row);
        let Some(floor) = floor_source.and_then(|r| censored_floor(r.values().copied(), offset)) else {
            fused.touch(q);
            continue;
        };

        let candidates: BTreeSet<&str> = g_row
            .into_iter()
            .chain(l_row)
            .flat_map(|r| r.keys().map(String::as_str))
            .collect();
        let scored = candidates
            .into_iter()
            .map(|p| {
                let g = g_row.and_then(|r| r.get(p)).copied().unwrap_or(floor);
                let l = match l_row.and_then(|r| r.get(p)) {
                    Some(&l) => l,
                    None => match config.missing_local {
                        MissingLocalPolicy::UseGlobal => g,
                        MissingLocalPolicy::Drop => floor,
                    },
                };
                (p.to_string(), alpha * g + beta * l)
            })
            .collect();
        fused.set_row(q.to_string(), top_k(scored, config.top_k));
    }
    Ok(fused)
}

fn censored_floor<S: Scalar>(scores: impl Iterator<Item = S> + Clone, offset: S) -> Option<S> {
    let min = scores.clone().reduce(S::min)?;
    let scale = scores.map(S::abs).fold(S::zero(), S::max);
    let scale = if scale > S::zero() { scale } else { S::one() };
    Some(min - offset * scale)
}
