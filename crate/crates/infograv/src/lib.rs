//! Analysis toolkit that treats text generation as motion through a
//! potential landscape: queries carry an information mass, next-token
//! distributions induce semantic potentials, and a thermodynamic sampler
//! walks the resulting field.
//!
//! The crate is organized around six pieces:
//!
//! * [`model`] — tokenizer, smoothed n-gram model, logprob-dump replay,
//!   and the [`model::TokenPredictor`] abstraction everything else uses.
//! * [`mass`] — information mass `M = α·H + β·D + γ·N` from query entropy,
//!   context depth, and novelty.
//! * [`field`] — potentials `Φ = -ln P`, PPMI embeddings, local
//!   gradient/curvature fits, and 2-D landscape grids.
//! * [`sampler`] — Boltzmann rescaling, seeded generation, trajectory
//!   action, and adaptive temperature.
//! * [`metrics`] — sensitivity, conductivity, stability, temperature
//!   sweeps, and a hallucination proxy.
//! * [`harness`] — experiment configs, the mass-vs-hallucination
//!   experiment runner, and landscape rendering with reproducible outputs.

pub mod error;
pub mod field;
pub mod harness;
pub mod mass;
pub mod metrics;
pub mod model;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
