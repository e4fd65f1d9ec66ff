//! Labeled random finite sets: Gaussian mixtures, Kalman steps, Bernoulli,
//! multi-Bernoulli and GLMB densities, the GLMB recursion, and the sensor and
//! clutter models that feed it.

mod density;
mod filter;
mod gaussian;
mod glmb;
mod sensor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use density::{
    bernoulli_density, glmb_density, lmb_hypothesis_weight, multi_bernoulli_density,
    BernoulliTrack,
};
pub use filter::{birth_mixture, GlmbConfig, GlmbFilter};
pub use gaussian::{gm_eval, kalman_predict, kalman_update, kalman_update_log, Gaussian, GaussianMixture};
pub use glmb::{
    extract_states, glmb_predict, glmb_update, k_best_subsets, prune_hypotheses, BirthComponent,
    BirthModel, Estimate, GlmbDensity, GlmbHypothesis, GlmbTrack, MeasurementModel, MotionModel,
    PredictLimits, PruneLimits, UpdateLimits, MISSED,
};
pub use sensor::{
    generate_clutter, generate_measurements, noise_factor, Measurement, MeasurementScan, TruthTag,
};

#[derive(Debug, Error, PartialEq)]
pub enum RfsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Track label: the scan at which the track was born and the birth
/// component (start location) it came from.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Label {
    pub birth_step: u32,
    pub birth_index: u32,
}

impl Label {
    pub const fn new(birth_step: u32, birth_index: u32) -> Self {
        Label { birth_step, birth_index }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.birth_step, self.birth_index)
    }
}
