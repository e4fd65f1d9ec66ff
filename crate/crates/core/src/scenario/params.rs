//! Model parameters and their defaults.
//!
//! Values marked "configuration default" below are not fixed by the mission
//! model itself; they were chosen so the bundled scenarios are well posed and
//! can be overridden per scenario file.

use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// Fixed-wing lateral model `x' = A x + B δ` with state
/// `[v, p, r, φ, ψ]` (lateral velocity, roll rate, yaw rate, roll, heading)
/// and inputs `[δ_aileron, δ_rudder]`.
///
/// The default is a generic small-UAV model trimmed at 20 m/s (configuration
/// default, not a specific airframe).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LateralModelParams {
    pub a: [[f64; 5]; 5],
    pub b: [[f64; 2]; 5],
}

impl Default for LateralModelParams {
    fn default() -> Self {
        LateralModelParams {
            a: [
                [-0.6, 1.2, -20.0, 9.81, 0.0],
                [-3.0, -15.0, 2.5, 0.0, 0.0],
                [0.9, -0.2, -1.2, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0, 0.0],
            ],
            b: [
                [0.0, 2.0],
                [60.0, 1.0],
                [1.5, -6.0],
                [0.0, 0.0],
                [0.0, 0.0],
            ],
        }
    }
}

/// Tracking filter configuration shared by the agent and target filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlmbParams {
    /// Per-scan survival probability used by both filters.
    pub survival_prob: f64,
    /// White-acceleration intensity (m²/s³) of the agent filter's constant-velocity model.
    pub agent_process_noise: f64,
    /// White-acceleration intensity (m²/s³) of the target filter's constant-velocity model.
    pub target_process_noise: f64,
    /// Birth probability per start location on the first scan.
    pub initial_birth_prob: f64,
    /// Birth probability per start location on every later scan.
    pub birth_prob: f64,
    pub birth_pos_std: f64,
    pub birth_vel_std: f64,
    /// Hypotheses below this weight are dropped.
    pub prune_threshold: f64,
    pub max_hypotheses: usize,
    pub gm_prune: f64,
    pub gm_cap: usize,
    /// Joint associations per hypothesis above which ranked (best-K) assignment is used.
    pub exhaustive_limit: usize,
    /// Total children budget for ranked assignment, split across parent hypotheses.
    pub update_budget: usize,
    pub max_survival_subsets: usize,
    pub max_birth_subsets: usize,
}

impl Default for GlmbParams {
    fn default() -> Self {
        GlmbParams {
            survival_prob: 0.99,
            agent_process_noise: 25.0,
            target_process_noise: 2.0,
            initial_birth_prob: 0.9,
            birth_prob: 0.005,
            birth_pos_std: 10.0,
            birth_vel_std: 5.0,
            prune_threshold: 1e-5,
            max_hypotheses: 100,
            gm_prune: 1e-5,
            gm_cap: 4,
            exhaustive_limit: 512,
            update_budget: 200,
            max_survival_subsets: 8,
            max_birth_subsets: 8,
        }
    }
}

/// Simulation, guidance, sensing and filtering parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Body-frame forward speed u (m/s). Configuration default.
    pub forward_speed: f64,
    /// Waypoint capture radius (m).
    pub waypoint_threshold: f64,
    pub dyn_rate: f64,
    pub filter_rate: f64,
    pub replan_rate: f64,
    /// Probability that a living agent dies at each death-process tick.
    pub death_prob_per_step: f64,
    /// Expected clutter points per scan. Configuration default.
    pub clutter_rate: f64,
    /// Detection probability. Configuration default.
    pub detect_prob: f64,
    /// Position measurement noise covariance (m²). Configuration default.
    pub meas_noise_cov: [[f64; 2]; 2],
    /// Continuous acceleration-noise intensity (m²/s³) for randomly moving targets.
    pub target_process_noise: f64,
    /// Target displacement (m) between replan checks that triggers a replan.
    pub movement_threshold: f64,
    pub lqr_q: [[f64; 5]; 5],
    pub lqr_r: [[f64; 2]; 2],
    pub agent_model: LateralModelParams,
    /// Simulated-time cap (s) after which a run terminates.
    pub max_time: f64,
    pub glmb: GlmbParams,
}

const WAYPOINT_THRESHOLD: f64 = 10.0;

impl Default for ModelParams {
    fn default() -> Self {
        let mut lqr_q = [[0.0; 5]; 5];
        for (i, row) in lqr_q.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        ModelParams {
            forward_speed: 20.0,
            waypoint_threshold: WAYPOINT_THRESHOLD,
            dyn_rate: 100.0,
            filter_rate: 1.0,
            replan_rate: 0.2,
            death_prob_per_step: 0.0,
            clutter_rate: 5.0,
            detect_prob: 0.95,
            meas_noise_cov: [[4.0, 0.0], [0.0, 4.0]],
            target_process_noise: 0.5,
            movement_threshold: 2.0 * WAYPOINT_THRESHOLD,
            lqr_q,
            lqr_r: [[1.0, 0.0], [0.0, 1.0]],
            agent_model: LateralModelParams::default(),
            max_time: 300.0,
            glmb: GlmbParams::default(),
        }
    }
}

impl ModelParams {
    /// Dynamics ticks per filter tick.
    pub fn dyn_per_filter(&self) -> u64 {
        (self.dyn_rate / self.filter_rate).round() as u64
    }

    /// Dynamics ticks per replan tick.
    pub fn dyn_per_replan(&self) -> u64 {
        (self.dyn_rate / self.replan_rate).round() as u64
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = [
            ("forward_speed", self.forward_speed),
            ("waypoint_threshold", self.waypoint_threshold),
            ("dyn_rate", self.dyn_rate),
            ("filter_rate", self.filter_rate),
            ("replan_rate", self.replan_rate),
            ("movement_threshold", self.movement_threshold),
            ("max_time", self.max_time),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScenarioError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let probs = [
            ("death_prob_per_step", self.death_prob_per_step),
            ("detect_prob", self.detect_prob),
            ("glmb.survival_prob", self.glmb.survival_prob),
            ("glmb.initial_birth_prob", self.glmb.initial_birth_prob),
            ("glmb.birth_prob", self.glmb.birth_prob),
            ("glmb.prune_threshold", self.glmb.prune_threshold),
            ("glmb.gm_prune", self.glmb.gm_prune),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(ScenarioError::invalid(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        let nonneg = [
            ("clutter_rate", self.clutter_rate),
            ("target_process_noise", self.target_process_noise),
            ("glmb.agent_process_noise", self.glmb.agent_process_noise),
            ("glmb.target_process_noise", self.glmb.target_process_noise),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ScenarioError::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        for (name, v) in [
            ("glmb.birth_pos_std", self.glmb.birth_pos_std),
            ("glmb.birth_vel_std", self.glmb.birth_vel_std),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScenarioError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("glmb.max_hypotheses", self.glmb.max_hypotheses),
            ("glmb.gm_cap", self.glmb.gm_cap),
            ("glmb.exhaustive_limit", self.glmb.exhaustive_limit),
            ("glmb.update_budget", self.glmb.update_budget),
            ("glmb.max_survival_subsets", self.glmb.max_survival_subsets),
            ("glmb.max_birth_subsets", self.glmb.max_birth_subsets),
        ] {
            if v == 0 {
                return Err(ScenarioError::invalid(format!("{name} must be at least 1")));
            }
        }
        check_ratio("dyn_rate", self.dyn_rate, "filter_rate", self.filter_rate)?;
        check_ratio("filter_rate", self.filter_rate, "replan_rate", self.replan_rate)?;

        if !is_spd2(&self.meas_noise_cov) {
            return Err(ScenarioError::invalid(
                "meas_noise_cov must be symmetric positive definite",
            ));
        }
        if !is_spd2(&self.lqr_r) {
            return Err(ScenarioError::invalid("lqr_r must be symmetric positive definite"));
        }
        let q = nalgebra::Matrix5::from_fn(|i, j| self.lqr_q[i][j]);
        if (q - q.transpose()).amax() > 1e-12
            || q.symmetric_eigenvalues().iter().any(|&e| e < -1e-12)
        {
            return Err(ScenarioError::invalid("lqr_q must be symmetric positive semidefinite"));
        }
        Ok(())
    }
}

fn check_ratio(fast: &str, f: f64, slow: &str, s: f64) -> Result<(), ScenarioError> {
    let ratio = f / s;
    if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 {
        return Err(ScenarioError::invalid(format!(
            "{fast} ({f}) must be an integer multiple of {slow} ({s})"
        )));
    }
    Ok(())
}

fn is_spd2(m: &[[f64; 2]; 2]) -> bool {
    let sym = (m[0][1] - m[1][0]).abs() <= 1e-12;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    sym && m[0][0] > 0.0 && det > 0.0
}
