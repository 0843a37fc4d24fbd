//! Token inventory, smoothed n-gram model, and the predictor abstraction.

mod dump;
mod persist;
mod tokenizer;

pub use dump::{load_dump, DumpSession, DumpStep, OTHER_SURFACE};
pub use tokenizer::tokenize;

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::stats;

/// Index into a [`Vocabulary`]. Id 0 is reserved for the unknown token.
#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    serde::Serialize,
    serde::Deserialize,
)]
pub struct TokenId(pub u32);

/// The unknown token every out-of-vocabulary surface maps onto.
pub const UNK: TokenId = TokenId(0);

/// Surface string of the unknown token.
pub const UNK_SURFACE: &str = "<unk>";

/// Surface that, when present in a vocabulary, terminates generation.
pub const END_OF_TEXT_SURFACE: &str = "</s>";

/// Token inventory mapping surfaces to dense ids in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    surfaces: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Vocabulary {
    /// A vocabulary holding only the unknown token.
    pub fn new() -> Self {
        let mut v = Vocabulary {
            surfaces: Vec::new(),
            lookup: HashMap::new(),
        };
        v.surfaces.push(UNK_SURFACE.to_string());
        v.lookup.insert(UNK_SURFACE.to_string(), 0);
        v
    }

    /// Rebuilds a vocabulary from an ordered surface list (index = id).
    pub fn from_surfaces(surfaces: Vec<String>) -> Result<Self> {
        if surfaces.first().map(String::as_str) != Some(UNK_SURFACE) {
            return Err(Error::Validation(format!(
                "vocabulary must start with {UNK_SURFACE:?} at id 0"
            )));
        }
        let mut lookup = HashMap::with_capacity(surfaces.len());
        for (i, s) in surfaces.iter().enumerate() {
            if lookup.insert(s.clone(), i as u32).is_some() {
                return Err(Error::Validation(format!("duplicate surface {s:?}")));
            }
        }
        Ok(Vocabulary { surfaces, lookup })
    }

    /// Id for a surface, inserting it if unseen.
    fn intern(&mut self, surface: &str) -> TokenId {
        if let Some(&id) = self.lookup.get(surface) {
            return TokenId(id);
        }
        let id = self.surfaces.len() as u32;
        self.surfaces.push(surface.to_string());
        self.lookup.insert(surface.to_string(), id);
        TokenId(id)
    }

    /// Id of a known surface.
    pub fn id(&self, surface: &str) -> Option<TokenId> {
        self.lookup.get(surface).map(|&i| TokenId(i))
    }

    /// Id of a surface, with unknown surfaces mapped to [`UNK`].
    pub fn id_or_unk(&self, surface: &str) -> TokenId {
        self.id(surface).unwrap_or(UNK)
    }

    /// Surface of an id; out-of-range ids display as `#<id>`.
    pub fn surface(&self, id: TokenId) -> &str {
        self.surfaces
            .get(id.0 as usize)
            .map(String::as_str)
            .unwrap_or("#?")
    }

    /// Ordered surface list (index = id).
    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    /// Id of the end-of-text token, when the vocabulary has one.
    pub fn end_of_text(&self) -> Option<TokenId> {
        self.id(END_OF_TEXT_SURFACE)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }
}

/// Origin of a [`DistributionView`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistSource {
    /// Computed by the built-in n-gram model.
    Builtin,
    /// Replayed from an external logprob dump.
    DumpReplay,
}

/// One next-token distribution, floored and normalized on construction.
///
/// Entries always sum to 1 (within 1e-9) and each lies in
/// `[stats::PROB_FLOOR, 1]`, so potentials derived from a view are finite.
#[derive(Debug, Clone)]
pub struct DistributionView {
    context: String,
    probs: Vec<f64>,
    source: DistSource,
}

impl DistributionView {
    /// Builds a view from non-negative weights, flooring and normalizing them.
    pub fn new(context: impl Into<String>, mut probs: Vec<f64>, source: DistSource) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Argument("distribution must be non-empty".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Argument(
                "distribution weights must be finite and non-negative".into(),
            ));
        }
        if probs.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Argument("distribution weights must not all be zero".into()));
        }
        stats::floor_and_normalize(&mut probs);
        Ok(DistributionView {
            context: context.into(),
            probs,
            source,
        })
    }

    /// Probabilities, one per token id.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Human-readable description of the conditioning context.
    pub fn context(&self) -> &str {
        &self.context
    }

    pub fn source(&self) -> DistSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Anything that yields a next-token distribution given a context.
///
/// The built-in n-gram model implements this; analyses are written against
/// the trait so synthetic sources (uniform, replayed dumps) plug in too.
pub trait TokenPredictor {
    /// Size of the vocabulary all distributions range over.
    fn vocab_size(&self) -> usize;

    /// Predictive distribution after `context`.
    fn next_dist(&self, context: &[TokenId]) -> DistributionView;

    /// Token that ends generation when sampled, if the vocabulary has one.
    fn end_of_text(&self) -> Option<TokenId> {
        None
    }

    /// Display surface for a token id.
    fn token_surface(&self, id: TokenId) -> String {
        format!("#{}", id.0)
    }
}

/// Log-probability (nats) of `tokens` following `context`, by the chain rule.
pub fn sequence_logprob<M: TokenPredictor + ?Sized>(
    model: &M,
    tokens: &[TokenId],
    context: &[TokenId],
) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::Argument("sequence_logprob needs at least one token".into()));
    }
    let mut ctx = context.to_vec();
    let mut logprob = 0.0;
    for &t in tokens {
        let dist = model.next_dist(&ctx);
        let p = *dist.probs().get(t.0 as usize).ok_or_else(|| {
            Error::Argument(format!("token id {} outside vocabulary of size {}", t.0, dist.len()))
        })?;
        logprob += p.ln();
        ctx.push(t);
    }
    Ok(logprob)
}

/// Training-corpus statistics kept for novelty and out-of-support checks.
#[derive(Debug, Clone)]
pub struct BaselineStats {
    unigram: Vec<f64>,
    /// `observed[o - 1]` holds every length-`o` token window seen in training.
    observed: Vec<HashSet<Vec<u32>>>,
    total_tokens: u64,
}

impl BaselineStats {
    /// Builds baseline stats, validating that the unigram is a positive
    /// distribution summing to 1 within 1e-9.
    pub fn new(
        unigram: Vec<f64>,
        observed: Vec<HashSet<Vec<u32>>>,
        total_tokens: u64,
    ) -> Result<Self> {
        if unigram.is_empty() {
            return Err(Error::Validation("baseline unigram must be non-empty".into()));
        }
        if unigram.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::Validation(
                "baseline unigram probabilities must be positive and finite".into(),
            ));
        }
        let sum: f64 = unigram.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "baseline unigram sums to {sum}, expected 1"
            )));
        }
        Ok(BaselineStats {
            unigram,
            observed,
            total_tokens,
        })
    }

    /// Smoothed unigram probabilities, one per token id.
    pub fn unigram(&self) -> &[f64] {
        &self.unigram
    }

    /// Highest n-gram order with an observed-window set.
    pub fn max_order(&self) -> usize {
        self.observed.len()
    }

    /// Whether training saw this exact window. `None` if the order is not tracked.
    pub fn is_observed(&self, gram: &[TokenId]) -> Option<bool> {
        let set = self.observed.get(gram.len().checked_sub(1)?)?;
        let key: Vec<u32> = gram.iter().map(|t| t.0).collect();
        Some(set.contains(&key))
    }

    /// Observed windows of one order, if tracked.
    pub fn observed_set(&self, order: usize) -> Option<&HashSet<Vec<u32>>> {
        self.observed.get(order.checked_sub(1)?)
    }

    /// Number of training tokens.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

/// Continuation counts for one observed context.
#[derive(Debug, Clone, Default)]
pub(crate) struct ContextTable {
    pub(crate) total: u64,
    pub(crate) continuations: HashMap<u32, u64>,
}

/// Interpolated absolute-discounting n-gram model.
///
/// Each order-m estimate subtracts a fixed discount from observed
/// continuation counts and hands the freed mass to the order-(m-1) estimate;
/// the unigram level interpolates with a uniform distribution so every token
/// keeps positive probability. Contexts never seen in training back off one
/// order entirely.
#[derive(Debug, Clone)]
pub struct LanguageModel {
    order: usize,
    discount: f64,
    vocab: Vocabulary,
    /// `contexts[i]` is keyed by length-(i+1) contexts (serving orders 2..=order).
    contexts: Vec<HashMap<Vec<u32>, ContextTable>>,
    baseline: BaselineStats,
}

/// Trains a model on raw text. `order` must lie in 1..=5 and `discount`
/// strictly inside (0, 1). The whole corpus is one token stream.
pub fn train(corpus: &str, order: usize, discount: f64) -> Result<LanguageModel> {
    if !(1..=5).contains(&order) {
        return Err(Error::Config(format!("order must be in 1..=5, got {order}")));
    }
    if !discount.is_finite() || discount <= 0.0 || discount >= 1.0 {
        return Err(Error::Config(format!(
            "discount must lie strictly inside (0, 1), got {discount}"
        )));
    }
    let surfaces = tokenize(corpus);
    if surfaces.is_empty() {
        return Err(Error::Training("corpus contains no tokens".into()));
    }

    let mut vocab = Vocabulary::new();
    let ids: Vec<u32> = surfaces.iter().map(|s| vocab.intern(s).0).collect();

    let mut contexts: Vec<HashMap<Vec<u32>, ContextTable>> = vec![HashMap::new(); order - 1];
    for m in 2..=order {
        let table = &mut contexts[m - 2];
        for win in ids.windows(m) {
            let (ctx, tok) = win.split_at(m - 1);
            let entry = table.entry(ctx.to_vec()).or_default();
            entry.total += 1;
            *entry.continuations.entry(tok[0]).or_insert(0) += 1;
        }
    }

    let mut counts = vec![0u64; vocab.len()];
    for &id in &ids {
        counts[id as usize] += 1;
    }
    let n = ids.len() as f64;
    let distinct = counts.iter().filter(|&&c| c > 0).count() as f64;
    let uniform = 1.0 / vocab.len() as f64;
    let lambda = discount * distinct / n;
    let unigram: Vec<f64> = counts
        .iter()
        .map(|&c| (c as f64 - discount).max(0.0) / n + lambda * uniform)
        .collect();

    let observed: Vec<HashSet<Vec<u32>>> = (1..=order)
        .map(|m| ids.windows(m).map(|w| w.to_vec()).collect())
        .collect();
    let baseline = BaselineStats::new(unigram, observed, ids.len() as u64)?;

    Ok(LanguageModel {
        order,
        discount,
        vocab,
        contexts,
        baseline,
    })
}

impl LanguageModel {
    /// Highest n-gram order the model conditions on.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Absolute discount subtracted from every observed count.
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn baseline(&self) -> &BaselineStats {
        &self.baseline
    }

    /// Tokenizes text and maps each surface into the vocabulary (unknown → unk).
    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        tokenize(text)
            .iter()
            .map(|s| self.vocab.id_or_unk(s))
            .collect()
    }

    /// Predictive distribution over the full vocabulary after `context`.
    ///
    /// Only the last `order - 1` context tokens matter; shorter contexts use
    /// the orders they can support, down to the smoothed unigram for `[]`.
    pub fn next_dist(&self, context: &[TokenId]) -> DistributionView {
        let mut probs = self.baseline.unigram.clone();
        for m in 2..=self.order {
            let need = m - 1;
            if context.len() < need {
                break;
            }
            let suffix: Vec<u32> = context[context.len() - need..]
                .iter()
                .map(|t| t.0)
                .collect();
            if let Some(table) = self.contexts[m - 2].get(&suffix) {
                let total = table.total as f64;
                let lambda = self.discount * table.continuations.len() as f64 / total;
                let mut next: Vec<f64> = probs.iter().map(|p| lambda * p).collect();
                for (&tok, &c) in &table.continuations {
                    next[tok as usize] += (c as f64 - self.discount) / total;
                }
                probs = next;
            }
            // unseen context: keep the lower-order estimate (full backoff)
        }
        let description = context
            .iter()
            .map(|&t| self.vocab.surface(t))
            .collect::<Vec<_>>()
            .join(" ");
        DistributionView::new(description, probs, DistSource::Builtin)
            .expect("model probabilities are positive")
    }
}

impl TokenPredictor for LanguageModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn next_dist(&self, context: &[TokenId]) -> DistributionView {
        LanguageModel::next_dist(self, context)
    }

    fn end_of_text(&self) -> Option<TokenId> {
        self.vocab.end_of_text()
    }

    fn token_surface(&self, id: TokenId) -> String {
        self.vocab.surface(id).to_string()
    }
}

// Internal accessors for the persistence layer.
impl LanguageModel {
    pub(crate) fn context_tables(&self) -> &[HashMap<Vec<u32>, ContextTable>] {
        &self.contexts
    }

    pub(crate) fn from_parts(
        order: usize,
        discount: f64,
        vocab: Vocabulary,
        contexts: Vec<HashMap<Vec<u32>, ContextTable>>,
        baseline: BaselineStats,
    ) -> Self {
        LanguageModel {
            order,
            discount,
            vocab,
            contexts,
            baseline,
        }
    }
}
