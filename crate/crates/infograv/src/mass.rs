//! Information mass of a query: `M = α·H + β·D + γ·N` built from predictive
//! entropy, context depth, and distributional novelty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sequence_logprob, BaselineStats, TokenId, TokenPredictor};
use crate::stats;

/// Weights (α, β, γ) applied to entropy, depth, and novelty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MassWeights {
    fn default() -> Self {
        MassWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

impl MassWeights {
    /// Weights must be finite, non-negative, and not all zero.
    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.beta, self.gamma];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!(
                "mass weights must be finite and non-negative, got {self:?}"
            )));
        }
        if all.iter().all(|&w| w == 0.0) {
            return Err(Error::Config("mass weights must not all be zero".into()));
        }
        Ok(())
    }
}

/// Component breakdown of one query's information mass.
#[derive(Debug, Clone, Serialize)]
pub struct MassReport {
    #[serde(rename = "entropy_H")]
    pub entropy_h: f64,
    #[serde(rename = "depth_D")]
    pub depth_d: f64,
    #[serde(rename = "novelty_N")]
    pub novelty_n: f64,
    #[serde(rename = "mass_M")]
    pub mass_m: f64,
    pub weights: MassWeights,
    pub query_len: usize,
}

/// Mean per-position predictive entropy of a query, in nats.
///
/// Position `i` contributes the Shannon entropy of the model's distribution
/// after the prefix `query[..i]`, so position 0 always uses the empty context.
pub fn query_entropy<M: TokenPredictor + ?Sized>(model: &M, query: &[TokenId]) -> Result<f64> {
    if query.is_empty() {
        return Err(Error::Argument("query_entropy needs a non-empty query".into()));
    }
    let mut total = 0.0;
    for i in 0..query.len() {
        let dist = model.next_dist(&query[..i]);
        total += stats::shannon_entropy(dist.probs());
    }
    Ok(total / query.len() as f64)
}

/// Context depth: summed positive pointwise mutual information between the
/// query and each context segment,
/// `Σ_i max(0, log P(Q | seg_i) - log P(Q))`.
///
/// No segments means no accumulated context, so the depth is zero.
pub fn context_depth<M: TokenPredictor + ?Sized>(
    model: &M,
    query: &[TokenId],
    segments: &[Vec<TokenId>],
) -> Result<f64> {
    if query.is_empty() {
        return Err(Error::Argument("context_depth needs a non-empty query".into()));
    }
    if segments.is_empty() {
        return Ok(0.0);
    }
    let base = sequence_logprob(model, query, &[])?;
    let mut depth = 0.0;
    for segment in segments {
        let conditioned = sequence_logprob(model, query, segment)?;
        depth += (conditioned - base).max(0.0);
    }
    Ok(depth)
}

/// Novelty: KL divergence (nats) from the query's empirical unigram
/// distribution to the training baseline unigram.
///
/// Query token ids must already be in-vocabulary (out-of-vocabulary surfaces
/// map to the unknown token during encoding, so fully novel queries score
/// the divergence of a point mass on unk).
pub fn novelty(query: &[TokenId], baseline: &BaselineStats) -> Result<f64> {
    if query.is_empty() {
        return Err(Error::Argument("novelty needs a non-empty query".into()));
    }
    let vocab_len = baseline.unigram().len();
    let mut empirical = vec![0.0; vocab_len];
    for &t in query {
        let slot = empirical.get_mut(t.0 as usize).ok_or_else(|| {
            Error::Argument(format!(
                "token id {} outside baseline vocabulary of size {vocab_len}",
                t.0
            ))
        })?;
        *slot += 1.0;
    }
    let n = query.len() as f64;
    for p in empirical.iter_mut() {
        *p /= n;
    }
    Ok(stats::kl_divergence(&empirical, baseline.unigram()))
}

/// Combines the three components into a mass report: `M = α·H + β·D + γ·N`.
///
/// Components must be finite and non-negative; weights must pass
/// [`MassWeights::validate`].
pub fn information_mass(
    entropy_h: f64,
    depth_d: f64,
    novelty_n: f64,
    weights: MassWeights,
    query_len: usize,
) -> Result<MassReport> {
    weights.validate()?;
    for (name, v) in [("entropy", entropy_h), ("depth", depth_d), ("novelty", novelty_n)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Argument(format!(
                "{name} component must be finite and non-negative, got {v}"
            )));
        }
    }
    Ok(MassReport {
        entropy_h,
        depth_d,
        novelty_n,
        mass_m: weights.alpha * entropy_h + weights.beta * depth_d + weights.gamma * novelty_n,
        weights,
        query_len,
    })
}

/// Computes all three components for a query and combines them.
pub fn analyze_query<M: TokenPredictor + ?Sized>(
    model: &M,
    baseline: &BaselineStats,
    query: &[TokenId],
    segments: &[Vec<TokenId>],
    weights: MassWeights,
) -> Result<MassReport> {
    let h = query_entropy(model, query)?;
    let d = context_depth(model, query, segments)?;
    let n = novelty(query, baseline)?;
    information_mass(h, d, n, weights, query.len())
}
