//! Thermodynamic sampling: Boltzmann rescaling of potentials, seeded
//! trajectory generation, path action, and mass-adaptive temperature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{potential, PotentialField};
use crate::model::{DistSource, DistributionView, TokenId, TokenPredictor};

/// Name of the RNG algorithm behind every sampling decision; recorded in
/// run manifests so outputs stay attributable to `(algorithm, seed)`.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Hard clamp range for sampling temperatures.
pub const TEMPERATURE_RANGE: (f64, f64) = (1e-3, 1e4);

/// Sampling temperature, clamped to [`TEMPERATURE_RANGE`] on construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Temperature(f64);

impl Temperature {
    /// Builds a temperature, clamping finite values into range and
    /// rejecting NaN.
    pub fn new(value: f64) -> Result<Temperature> {
        if value.is_nan() {
            return Err(Error::Config("temperature must not be NaN".into()));
        }
        Ok(Temperature(value.clamp(TEMPERATURE_RANGE.0, TEMPERATURE_RANGE.1)))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Boltzmann rescaling of a potential field:
/// `P(t) = exp(-phi_t / T) / Z`, computed with the log-sum-exp shift so
/// extreme temperatures stay finite.
pub fn boltzmann(field: &PotentialField, temperature: Temperature) -> DistributionView {
    let t = temperature.value();
    let scaled: Vec<f64> = field.phi().iter().map(|&phi| -phi / t).collect();
    let max = scaled.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let weights: Vec<f64> = scaled.iter().map(|&x| (x - max).exp()).collect();
    DistributionView::new(
        format!("{} @ T={t}", field.context()),
        weights,
        DistSource::Builtin,
    )
    .expect("boltzmann weights are positive")
}

/// One generated token walk and its per-step record.
///
/// `phis` holds the raw (temperature-free) potential of each chosen token,
/// so `action` equals the negative log-probability of the path under the
/// unrescaled model.
#[derive(Debug, Clone)]
pub struct Trajectory {
    tokens: Vec<TokenId>,
    surfaces: Vec<String>,
    phis: Vec<f64>,
    temps: Vec<f64>,
    action: f64,
    seed: u64,
}

impl Trajectory {
    /// Assembles a trajectory, computing the action as the running sum of
    /// per-step potentials.
    pub fn new(
        tokens: Vec<TokenId>,
        surfaces: Vec<String>,
        phis: Vec<f64>,
        temps: Vec<f64>,
        seed: u64,
    ) -> Result<Trajectory> {
        if tokens.len() != phis.len() || tokens.len() != temps.len() || tokens.len() != surfaces.len()
        {
            return Err(Error::Argument(
                "trajectory fields must have equal lengths".into(),
            ));
        }
        let action = phis.iter().sum();
        Ok(Trajectory {
            tokens,
            surfaces,
            phis,
            temps,
            action,
            seed,
        })
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    /// Token surfaces, parallel to [`Self::tokens`].
    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    /// Raw potential of each chosen token (before temperature rescaling).
    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    /// Per-step sampling temperatures.
    pub fn temps(&self) -> &[f64] {
        &self.temps
    }

    /// Accumulated action: the sum of per-step potentials.
    pub fn action(&self) -> f64 {
        self.action
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// JSON form: `{"tokens":[...],"phis":[...],"temps":[...],"action":x,"seed":n}`
    /// with tokens as surfaces.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "tokens": self.surfaces,
            "phis": self.phis,
            "temps": self.temps,
            "action": self.action,
            "seed": self.seed,
        })
    }
}

/// Path action: the summed per-step potentials of a trajectory, equal to
/// the negative log-probability of the path at unit temperature.
pub fn trajectory_action(traj: &Trajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::Argument("action of an empty trajectory is undefined".into()));
    }
    Ok(traj.phis().iter().sum())
}

/// Draws an index from a distribution using one uniform variate.
fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1 // float tail: the last index absorbs the remainder
}

/// Samples a token walk of up to `max_len` steps starting from `query`.
///
/// Each step rescales the model's next-token potential by `temperature`,
/// draws from the resulting Boltzmann distribution with a ChaCha8 stream
/// seeded by `seed`, and records the *raw* potential of the chosen token.
/// Generation stops early when the predictor's end-of-text token is drawn
/// (that token is still recorded).
pub fn generate<M: TokenPredictor + ?Sized>(
    model: &M,
    query: &[TokenId],
    temperature: Temperature,
    max_len: usize,
    seed: u64,
) -> Result<Trajectory> {
    if max_len == 0 {
        return Err(Error::Argument("max_len must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eot = model.end_of_text();

    let mut context = query.to_vec();
    let mut tokens = Vec::new();
    let mut surfaces = Vec::new();
    let mut phis = Vec::new();
    let mut temps = Vec::new();

    for _ in 0..max_len {
        let dist = model.next_dist(&context);
        let field = potential(&dist);
        let rescaled = boltzmann(&field, temperature);
        let idx = sample_index(rescaled.probs(), &mut rng);
        let token = TokenId(idx as u32);

        tokens.push(token);
        surfaces.push(model.token_surface(token));
        phis.push(field.phi()[idx]);
        temps.push(temperature.value());
        context.push(token);

        if Some(token) == eot {
            break;
        }
    }

    Trajectory::new(tokens, surfaces, phis, temps, seed)
}

/// Settings for mass-adaptive temperature:
/// `T(M) = clamp(base + slope * (M - reference_mass), t_min, t_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveTempConfig {
    pub base: f64,
    pub slope: f64,
    pub reference_mass: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for AdaptiveTempConfig {
    fn default() -> Self {
        AdaptiveTempConfig {
            base: 0.7,
            slope: 0.2,
            reference_mass: 1.0,
            t_min: 0.2,
            t_max: 2.0,
        }
    }
}

impl AdaptiveTempConfig {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.base, self.slope, self.reference_mass, self.t_min, self.t_max];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("adaptive temperature settings must be finite".into()));
        }
        if !(self.t_min <= self.base && self.base <= self.t_max) {
            return Err(Error::Config(format!(
                "adaptive temperature needs t_min <= base <= t_max, got [{}, {}] around {}",
                self.t_min, self.t_max, self.base
            )));
        }
        Ok(())
    }
}

/// Maps information mass to a sampling temperature: heavier queries run
/// hotter, clamped into the configured band.
pub fn adaptive_temperature(mass: f64, cfg: &AdaptiveTempConfig) -> Result<Temperature> {
    cfg.validate()?;
    if !mass.is_finite() {
        return Err(Error::Argument(format!("mass must be finite, got {mass}")));
    }
    let raw = cfg.base + cfg.slope * (mass - cfg.reference_mass);
    Temperature::new(raw.clamp(cfg.t_min, cfg.t_max))
}
