//! Semantic potential fields: `Φ(t) = -ln P(t | context)` and the geometric
//! structure (embeddings, gradients, curvature, landscapes) built on them.

mod embedding;
mod geometry;
mod landscape;
pub(crate) mod linalg;

pub use embedding::{build_embedding, EmbeddingConfig, EmbeddingSpace};
pub use geometry::{
    curvature_metric, geometry_to_csv, local_geometry, local_gradient, local_hessian_eig,
    LocalGeometry,
};
pub use landscape::{landscape_grid, LandscapeGrid};

use crate::error::{Error, Result};
use crate::model::DistributionView;
use crate::stats;

/// Potential over a vocabulary: `phi[t] = -ln P(t)`, bounded by the
/// probability floor so every value lies in `[0, stats::max_potential()]`.
#[derive(Debug, Clone)]
pub struct PotentialField {
    context: String,
    phi: Vec<f64>,
}

impl PotentialField {
    /// Builds a field from explicit potential values.
    ///
    /// Values must be finite and lie within `[0, stats::max_potential()]`;
    /// synthetic fields (planted landscapes, test fixtures) use this.
    pub fn from_values(context: impl Into<String>, phi: Vec<f64>) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::Argument("potential field must be non-empty".into()));
        }
        let cap = stats::max_potential();
        for &v in &phi {
            if !v.is_finite() || v < 0.0 || v > cap + 1e-9 {
                return Err(Error::Argument(format!(
                    "potential {v} outside [0, {cap}]"
                )));
            }
        }
        Ok(PotentialField {
            context: context.into(),
            phi,
        })
    }

    /// Potential values, one per token id.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Description of the conditioning context the field came from.
    pub fn context(&self) -> &str {
        &self.context
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

/// Potential of a next-token distribution: `phi[t] = -ln p_t`.
///
/// Low-probability tokens sit high on the potential; the probability floor
/// caps the landscape at `stats::max_potential()`.
pub fn potential(dist: &DistributionView) -> PotentialField {
    let cap = stats::max_potential();
    let phi = dist
        .probs()
        .iter()
        .map(|&p| (-p.ln()).clamp(0.0, cap))
        .collect();
    PotentialField {
        context: dist.context().to_string(),
        phi,
    }
}
