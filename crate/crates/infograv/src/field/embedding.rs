//! Token embedding built from positive-PMI co-occurrence statistics.
//!
//! Co-occurrence pairs are read off the model's stored n-gram tables: a
//! window of `w` covers token pairs at distances 1..=w, which the tables of
//! orders 2..=w+1 record exactly. The PPMI matrix is factored by power
//! iteration with deflation, and coordinates are scaled eigenvectors
//! (`v_j * sqrt(|λ_j|)`), after which each token gets its k nearest
//! neighbors by Euclidean distance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::linalg::{top_eigenpair, SymMatrix};
use crate::model::{LanguageModel, TokenId};

/// Settings for [`build_embedding`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Number of embedding dimensions (2..=256).
    pub dims: usize,
    /// Symmetric co-occurrence window = max pair distance counted.
    pub window: usize,
    /// Neighbors per token in the k-NN graph.
    pub k: usize,
    /// Seed for the power-iteration start vectors.
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dims: 32,
            window: 2,
            k: 16,
            seed: 0,
        }
    }
}

/// Token coordinates plus the k-nearest-neighbor graph over them.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    dims: usize,
    coords: Vec<Vec<f64>>,
    neighbors: Vec<Vec<TokenId>>,
    k: usize,
}

impl EmbeddingSpace {
    /// Builds a space directly from coordinates (synthetic landscapes,
    /// tests). Requires at least `k + 1` points of equal dimension.
    pub fn from_coords(coords: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {k}")));
        }
        if coords.len() <= k {
            return Err(Error::Config(format!(
                "need more than k = {k} points, got {}",
                coords.len()
            )));
        }
        let dims = coords[0].len();
        if dims == 0 {
            return Err(Error::Config("coordinates must have at least 1 dimension".into()));
        }
        for c in &coords {
            if c.len() != dims {
                return Err(Error::Config("ragged coordinate rows".into()));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("coordinates must be finite".into()));
            }
        }
        let neighbors = knn(&coords, k);
        Ok(EmbeddingSpace {
            dims,
            coords,
            neighbors,
            k,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Number of embedded tokens.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coord(&self, t: TokenId) -> &[f64] {
        &self.coords[t.0 as usize]
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    /// The k nearest neighbors of a token, closest first, ties broken by
    /// ascending token id; never contains the token itself.
    pub fn neighbors(&self, t: TokenId) -> &[TokenId] {
        &self.neighbors[t.0 as usize]
    }

    pub fn squared_distance(&self, a: TokenId, b: TokenId) -> f64 {
        dist2(self.coord(a), self.coord(b))
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn knn(coords: &[Vec<f64>], k: usize) -> Vec<Vec<TokenId>> {
    let n = coords.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut by_dist: Vec<(f64, u32)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist2(&coords[i], &coords[j]), j as u32))
            .collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.push(by_dist.iter().take(k).map(|&(_, j)| TokenId(j)).collect());
    }
    out
}

/// Builds an embedding space from a trained model's co-occurrence counts.
///
/// Fails when the vocabulary has fewer than `dims + 1` tokens, when `k`
/// exceeds the vocabulary, or when the window needs pair distances the
/// model's n-gram order does not record (`window > order - 1`).
pub fn build_embedding(model: &LanguageModel, cfg: &EmbeddingConfig) -> Result<EmbeddingSpace> {
    if !(2..=256).contains(&cfg.dims) {
        return Err(Error::Config(format!("dims must be in 2..=256, got {}", cfg.dims)));
    }
    if cfg.k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {}", cfg.k)));
    }
    if cfg.window < 1 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let n = model.vocab().len();
    if n < cfg.dims + 1 {
        return Err(Error::Config(format!(
            "vocabulary of {n} tokens is smaller than dims + 1 = {}",
            cfg.dims + 1
        )));
    }
    if n <= cfg.k {
        return Err(Error::Config(format!(
            "vocabulary of {n} tokens cannot supply k = {} neighbors",
            cfg.k
        )));
    }
    if cfg.window > model.order().saturating_sub(1) {
        return Err(Error::Config(format!(
            "window {} needs pair distances the order-{} model does not record",
            cfg.window,
            model.order()
        )));
    }

    // symmetric co-occurrence counts from the stored n-gram tables
    let mut cooc = SymMatrix::new(n);
    for distance in 1..=cfg.window {
        let table = &model.context_tables()[distance - 1];
        for (ctx, entry) in table {
            let first = ctx[0] as usize;
            for (&last, &c) in &entry.continuations {
                cooc.add_sym(first, last as usize, c as f64);
            }
        }
    }

    // positive PMI: max(0, ln(p(a,b) / (p(a) p(b))))
    let mut marginals = vec![0.0; n];
    let mut total = 0.0;
    for (i, marginal) in marginals.iter_mut().enumerate() {
        for j in 0..n {
            *marginal += cooc.get(i, j);
        }
        total += *marginal;
    }
    if total <= 0.0 {
        return Err(Error::Training(
            "no co-occurrence pairs: corpus too short for the window".into(),
        ));
    }
    let mut ppmi = SymMatrix::new(n);
    for i in 0..n {
        for j in i..n {
            let c = cooc.get(i, j);
            if c > 0.0 {
                let pmi = (c * total / (marginals[i] * marginals[j])).ln();
                if pmi > 0.0 {
                    ppmi.set(i, j, pmi);
                }
            }
        }
    }

    // truncated eigendecomposition by power iteration with deflation
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut coords = vec![vec![0.0; cfg.dims]; n];
    for dim in 0..cfg.dims {
        let (lambda, v) = top_eigenpair(&ppmi, &mut rng, 512, 1e-13);
        if lambda.abs() < 1e-12 {
            break; // remaining spectrum is numerically zero
        }
        let scale = lambda.abs().sqrt();
        for (i, row) in coords.iter_mut().enumerate() {
            row[dim] = v[i] * scale;
        }
        ppmi.deflate(lambda, &v);
    }

    let neighbors = knn(&coords, cfg.k);
    Ok(EmbeddingSpace {
        dims: cfg.dims,
        coords,
        neighbors,
        k: cfg.k,
    })
}
