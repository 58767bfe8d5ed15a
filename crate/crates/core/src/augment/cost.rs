//! Token and currency estimate for running the two agents over a corpus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub input_price_per_token: f64,
    pub output_price_per_token: f64,
    pub chunking_prompt_tokens: u64,
    pub per_chunk_query_prompt_tokens: u64,
    pub per_chunk_input_tokens: u64,
    pub per_chunk_output_tokens: u64,
    pub chunking_output_tokens: u64,
}

impl Default for CostModel {
    /// Token budget of the bundled templates at $2/M input and $6/M output.
    fn default() -> Self {
        Self {
            input_price_per_token: 2e-6,
            output_price_per_token: 6e-6,
            chunking_prompt_tokens: 120,
            per_chunk_query_prompt_tokens: 60,
            per_chunk_input_tokens: 40,
            per_chunk_output_tokens: 20,
            chunking_output_tokens: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub passages: u64,
    pub avg_passage_tokens: u64,
    pub avg_chunks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub input_tokens_per_passage: u64,
    pub output_tokens_per_passage: u64,
    pub cost_per_passage: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub total_cost: f64,
}

pub fn estimate_cost(stats: CorpusStats, model: &CostModel) -> Result<CostEstimate> {
    if stats.passages == 0 || stats.avg_passage_tokens == 0 || stats.avg_chunks == 0 {
        return Err(Error::invalid("passages, average tokens and average chunks must be positive"));
    }
    if !(model.input_price_per_token >= 0.0 && model.output_price_per_token >= 0.0) {
        return Err(Error::invalid("token prices must be non-negative"));
    }
    let input = model.chunking_prompt_tokens
        + stats.avg_passage_tokens
        + stats.avg_chunks * (model.per_chunk_query_prompt_tokens + model.per_chunk_input_tokens);
    let output = model.chunking_output_tokens + stats.avg_chunks * model.per_chunk_output_tokens;
    let per_passage = input as f64 * model.input_price_per_token
        + output as f64 * model.output_price_per_token;
    Ok(CostEstimate {
        input_tokens_per_passage: input,
        output_tokens_per_passage: output,
        cost_per_passage: per_passage,
        input_tokens: input * stats.passages,
        output_tokens: output * stats.passages,
        total_cost: per_passage * stats.passages as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TYPICAL: CorpusStats = CorpusStats {
        passages: 1,
        avg_passage_tokens: 200,
        avg_chunks: 5,
    };

    #[test]
    fn typical_passage_budget() {
        let est = estimate_cost(TYPICAL, &CostModel::default()).unwrap();
        assert_eq!(est.input_tokens_per_passage, 820);
        assert_eq!(est.output_tokens_per_passage, 300);
        assert!((est.cost_per_passage - 0.00344).abs() < 1e-9);
    }

    #[test]
    fn scales_with_corpus() {
        let est = estimate_cost(CorpusStats { passages: 484_000, ..TYPICAL }, &CostModel::default()).unwrap();
        assert!((1600.0..=1700.0).contains(&est.total_cost), "{}", est.total_cost);
        assert_eq!(est.input_tokens, 820 * 484_000);
    }

    #[test]
    fn free_model_costs_nothing() {
        let free = CostModel {
            input_price_per_token: 0.0,
            output_price_per_token: 0.0,
            ..CostModel::default()
        };
        let est = estimate_cost(TYPICAL, &free).unwrap();
        assert_eq!(est.total_cost, 0.0);
        assert_eq!((est.input_tokens, est.output_tokens), (820, 300));
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(estimate_cost(CorpusStats { passages: 0, ..TYPICAL }, &CostModel::default()).is_err());
    }
}
