use nalgebra::{DMatrix, DVector};

use super::gaussian::{Gaussian, GaussianMixture};
use super::glmb::{
    extract_states, glmb_predict, glmb_update, prune_hypotheses, BirthComponent, BirthModel,
    Estimate, GlmbDensity, MeasurementModel, MotionModel, PredictLimits, PruneLimits,
    UpdateLimits,
};
use super::RfsError;
use crate::scenario::{GlmbParams, MissionArea, Point};

/// Truncation settings for one filter instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmbConfig {
    pub predict: PredictLimits,
    pub update: UpdateLimits,
    pub prune: PruneLimits,
}

impl From<&GlmbParams> for GlmbConfig {
    fn from(p: &GlmbParams) -> Self {
        GlmbConfig {
            predict: PredictLimits {
                max_survival_subsets: p.max_survival_subsets,
                max_birth_subsets: p.max_birth_subsets,
                max_hypotheses: p.max_hypotheses * 4,
            },
            update: UpdateLimits { exhaustive_limit: p.exhaustive_limit, budget: p.update_budget },
            prune: PruneLimits {
                weight_threshold: p.prune_threshold,
                max_hypotheses: p.max_hypotheses,
                gm_threshold: p.gm_prune,
                gm_cap: p.gm_cap,
            },
        }
    }
}

/// Birth mixture centred on a start location with zero velocity.
pub fn birth_mixture(at: Point, pos_std: f64, vel_std: f64) -> GaussianMixture {
    let mean = DVector::from_vec(vec![at.x, at.y, 0.0, 0.0]);
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![
        pos_std * pos_std,
        pos_std * pos_std,
        vel_std * vel_std,
        vel_std * vel_std,
    ]));
    GaussianMixture::single(Gaussian { mean, cov })
}

/// One GM-GLMB tracker with a constant-velocity model and a birth component
/// per known start location.
#[derive(Debug, Clone)]
pub struct GlmbFilter {
    pub motion: MotionModel,
    pub meas: MeasurementModel,
    pub survival_prob: f64,
    pub detect_prob: f64,
    /// Clutter density per unit area.
    pub clutter_intensity: f64,
    pub birth_locations: Vec<GaussianMixture>,
    pub initial_birth_prob: f64,
    pub birth_prob: f64,
    pub config: GlmbConfig,
    pub density: GlmbDensity,
    step: u32,
}

impl GlmbFilter {
    /// Filter for objects starting at `starts`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        starts: &[Point],
        params: &GlmbParams,
        process_noise: f64,
        dt: f64,
        detect_prob: f64,
        clutter_rate: f64,
        meas_noise: [[f64; 2]; 2],
        area: &MissionArea,
    ) -> Result<Self, RfsError> {
        let r = DMatrix::from_row_slice(2, 2, &[meas_noise[0][0], meas_noise[0][1], meas_noise[1][0], meas_noise[1][1]]);
        if r.clone().cholesky().is_none() {
            return Err(RfsError::NotPositiveDefinite("filter measurement noise".into()));
        }
        Ok(GlmbFilter {
            motion: MotionModel::constant_velocity(dt, process_noise),
            meas: MeasurementModel::position(r),
            survival_prob: params.survival_prob,
            detect_prob,
            clutter_intensity: clutter_rate / area.size(),
            birth_locations: starts
                .iter()
                .map(|p| birth_mixture(*p, params.birth_pos_std, params.birth_vel_std))
                .collect(),
            initial_birth_prob: params.initial_birth_prob,
            birth_prob: params.birth_prob,
            config: GlmbConfig::from(params),
            density: GlmbDensity::empty(),
            step: 0,
        })
    }

    /// Number of scans processed so far.
    pub fn step_count(&self) -> u32 {
        self.step
    }

    pub fn birth_model(&self, step: u32) -> BirthModel {
        let r = if step == 0 { self.initial_birth_prob } else { self.birth_prob };
        BirthModel {
            components: self
                .birth_locations
                .iter()
                .map(|m| BirthComponent { r, mixture: m.clone() })
                .collect(),
        }
    }

    /// Predict, update with `scan`, prune and extract.
    pub fn process(&mut self, scan: &[Point]) -> Result<Vec<Estimate>, RfsError> {
        let birth = self.birth_model(self.step);
        let predicted = glmb_predict(
            &self.density,
            &self.motion,
            self.survival_prob,
            &birth,
            self.step,
            self.config.predict,
        );
        let z: Vec<DVector<f64>> = scan.iter().map(|p| DVector::from_vec(vec![p.x, p.y])).collect();
        let updated = glmb_update(
            &predicted,
            &z,
            &self.meas,
            self.detect_prob,
            self.clutter_intensity,
            self.config.update,
        )?;
        self.density = prune_hypotheses(&updated, self.config.prune);
        self.step += 1;
        Ok(extract_states(&self.density))
    }
}
