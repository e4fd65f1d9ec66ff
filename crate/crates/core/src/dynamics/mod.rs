//! Truth dynamics: fixed-wing agents under LQR heading control, double
//! integrator targets, waypoint guidance and the seeded death process.

mod lqr;

use nalgebra::{DMatrix, Matrix5, SMatrix, Vector2, Vector5};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{ModelParams, Point};

pub use lqr::{dare_gain, discretize, solve_dare, spectral_radius};

type Matrix5x2 = SMatrix<f64, 5, 2>;
type Matrix2x5 = SMatrix<f64, 2, 5>;

/// Index of the heading angle inside the lateral state.
pub const HEADING: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("Riccati iteration did not converge to a stabilizing solution")]
    RiccatiDiverged,
    #[error("agent {0} is dead and cannot be propagated")]
    DeadAgent(usize),
    #[error("agent position coincides with its waypoint")]
    CoincidentPoints,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Wraps an angle to (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

/// Continuous lateral model plus its zero-order-hold discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: Matrix5<f64>,
    pub b: Matrix5x2,
    pub dt: f64,
    ad: Matrix5<f64>,
    bd: Matrix5x2,
}

impl LinearModel {
    pub fn new(a: Matrix5<f64>, b: Matrix5x2, dt: f64) -> Result<Self, DynamicsError> {
        let (ad, bd) = discretize(
            &DMatrix::from_column_slice(5, 5, a.as_slice()),
            &DMatrix::from_column_slice(5, 2, b.as_slice()),
            dt,
        )?;
        Ok(LinearModel {
            a,
            b,
            dt,
            ad: Matrix5::from_column_slice(ad.as_slice()),
            bd: Matrix5x2::from_column_slice(bd.as_slice()),
        })
    }

    /// Builds the agent model from scenario parameters at the dynamics rate.
    pub fn from_params(params: &ModelParams) -> Result<Self, DynamicsError> {
        let m = &params.agent_model;
        let a = Matrix5::from_fn(|i, j| m.a[i][j]);
        let b = Matrix5x2::from_fn(|i, j| m.b[i][j]);
        Self::new(a, b, 1.0 / params.dyn_rate)
    }

    pub fn discrete_a(&self) -> &Matrix5<f64> {
        &self.ad
    }

    pub fn discrete_b(&self) -> &Matrix5x2 {
        &self.bd
    }
}

/// Full-state feedback gain, `δ = -K x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrGain {
    pub k: Matrix2x5,
}

impl LqrGain {
    /// Closed-loop discrete state matrix `Ad - Bd K`.
    pub fn closed_loop(&self, model: &LinearModel) -> Matrix5<f64> {
        model.ad - model.bd * self.k
    }
}

/// LQR gain from the discrete Riccati solution of the dt-discretized model.
pub fn lqr_gain(
    model: &LinearModel,
    q: &Matrix5<f64>,
    r: &nalgebra::Matrix2<f64>,
) -> Result<LqrGain, DynamicsError> {
    let k = dare_gain(
        &DMatrix::from_column_slice(5, 5, model.ad.as_slice()),
        &DMatrix::from_column_slice(5, 2, model.bd.as_slice()),
        &DMatrix::from_column_slice(5, 5, q.as_slice()),
        &DMatrix::from_column_slice(2, 2, r.as_slice()),
    )?;
    Ok(LqrGain { k: Matrix2x5::from_column_slice(k.as_slice()) })
}

/// Synthesizes the agent model and its LQR gain from scenario parameters.
pub fn agent_controller(params: &ModelParams) -> Result<(LinearModel, LqrGain), DynamicsError> {
    let model = LinearModel::from_params(params)?;
    let q = Matrix5::from_fn(|i, j| params.lqr_q[i][j]);
    let r = nalgebra::Matrix2::from_fn(|i, j| params.lqr_r[i][j]);
    let gain = lqr_gain(&model, &q, &r)?;
    Ok((model, gain))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: usize,
    /// `[v, p, r, φ, ψ]`.
    pub lateral: Vector5<f64>,
    pub position: Point,
    pub alive: bool,
}

impl AgentState {
    pub fn new(id: usize, position: Point, heading: f64) -> Self {
        let mut lateral = Vector5::zeros();
        lateral[HEADING] = wrap_angle(heading);
        AgentState { id, lateral, position, alive: true }
    }

    pub fn heading(&self) -> f64 {
        self.lateral[HEADING]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub id: usize,
    pub position: Point,
    pub velocity: Vector2<f64>,
}

/// Bearing from `agent_pos` to `waypoint` (east = 0, counterclockwise positive).
pub fn heading_command(agent_pos: &Point, waypoint: &Point) -> Result<f64, DynamicsError> {
    let d = waypoint - agent_pos;
    if d.x == 0.0 && d.y == 0.0 {
        return Err(DynamicsError::CoincidentPoints);
    }
    Ok(wrap_angle(d.y.atan2(d.x)))
}

/// One dynamics step of a living agent tracking heading `psi_cmd` at forward speed `u`.
pub fn step_agent(
    state: &AgentState,
    psi_cmd: f64,
    model: &LinearModel,
    gain: &LqrGain,
    u: f64,
) -> Result<AgentState, DynamicsError> {
    if !state.alive {
        return Err(DynamicsError::DeadAgent(state.id));
    }
    let psi = state.heading();
    let v = state.lateral[0];

    let mut error = state.lateral;
    error[HEADING] = wrap_angle(psi - psi_cmd);
    let input = -(gain.k * error);

    let mut lateral = model.ad * state.lateral + model.bd * input;
    lateral[HEADING] = wrap_angle(lateral[HEADING]);

    let (s, c) = psi.sin_cos();
    let velocity = Point::new(u * c - v * s, u * s + v * c);
    Ok(AgentState {
        id: state.id,
        lateral,
        position: state.position + velocity * model.dt,
        alive: true,
    })
}

/// Exact double-integrator step under constant acceleration over `dt`.
pub fn step_target(state: &TargetState, dt: f64, accel: &Vector2<f64>) -> TargetState {
    TargetState {
        id: state.id,
        position: state.position + state.velocity * dt + accel * (0.5 * dt * dt),
        velocity: state.velocity + accel * dt,
    }
}

/// Per-agent waypoint memory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GuidanceState {
    pub assigned_target: Option<usize>,
    pub waypoints: Vec<Point>,
    pub active: usize,
    pub mission_complete: bool,
}

impl GuidanceState {
    pub fn new(assigned_target: Option<usize>, waypoints: Vec<Point>) -> Self {
        let mission_complete = waypoints.is_empty();
        GuidanceState { assigned_target, waypoints, active: 0, mission_complete }
    }

    pub fn active_waypoint(&self) -> Option<&Point> {
        self.waypoints.get(self.active)
    }

    /// Point to steer toward: the active waypoint, or the final one once
    /// the list is exhausted.
    pub fn steer_point(&self) -> Option<&Point> {
        self.active_waypoint().or_else(|| self.waypoints.last())
    }
}

/// Advances to the next waypoint when the active one is closer than `threshold`.
pub fn advance_waypoint(guidance: &GuidanceState, agent_pos: &Point, threshold: f64) -> GuidanceState {
    let mut next = guidance.clone();
    if let Some(wp) = guidance.active_waypoint() {
        if (wp - agent_pos).norm() < threshold {
            next.active += 1;
        }
    }
    if next.active >= next.waypoints.len() {
        next.active = next.waypoints.len();
        next.mission_complete = true;
    }
    next
}

/// True once `agent_pos` has crossed the line through `waypoint` normal to
/// the leg `from -> waypoint`, i.e. the agent flew past it.
pub fn passed_waypoint(from: &Point, waypoint: &Point, agent_pos: &Point) -> bool {
    let leg = waypoint - from;
    leg.norm_squared() > 0.0 && (agent_pos - waypoint).dot(&leg) > 0.0
}

/// Kills each living agent with probability `p`, drawing in ascending id order.
/// Returns the ids that died on this call.
pub fn death_process<R: Rng + ?Sized>(
    agents: &mut [AgentState],
    p: f64,
    rng: &mut R,
) -> Result<Vec<usize>, DynamicsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DynamicsError::InvalidArgument(format!(
            "death probability must lie in [0, 1], got {p}"
        )));
    }
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by_key(|&i| agents[i].id);
    let mut died = Vec::new();
    for i in order {
        if !agents[i].alive {
            continue;
        }
        let draw: f64 = rng.random();
        if draw < p {
            agents[i].alive = false;
            died.push(agents[i].id);
        }
    }
    Ok(died)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn controller() -> (LinearModel, LqrGain, f64) {
        let params = ModelParams::default();
        let (m, g) = agent_controller(&params).unwrap();
        (m, g, params.forward_speed)
    }

    #[test]
    fn heading_axis_conventions() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(heading_command(&o, &Point::new(5.0, 0.0)).unwrap(), 0.0);
        assert!((heading_command(&o, &Point::new(0.0, 5.0)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((heading_command(&o, &Point::new(1.0, 1.0)).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(heading_command(&o, &Point::new(-1.0, 0.0)).unwrap(), PI);
        assert_eq!(heading_command(&o, &o), Err(DynamicsError::CoincidentPoints));
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn default_closed_loop_is_stable() {
        let (m, g, _) = controller();
        let cl = g.closed_loop(&m);
        let rho = spectral_radius(&DMatrix::from_column_slice(5, 5, cl.as_slice()));
        assert!(rho < 1.0, "rho = {rho}");
    }

    #[test]
    fn equilibrium_flies_straight() {
        let (m, g, u) = controller();
        let psi = 0.3;
        let s = AgentState::new(0, Point::new(1.0, 2.0), psi);
        let next = step_agent(&s, psi, &m, &g, u).unwrap();
        let expected = Point::new(1.0 + u * m.dt * psi.cos(), 2.0 + u * m.dt * psi.sin());
        assert!((next.position - expected).norm() < 1e-12);
        assert_eq!(next.lateral, s.lateral);
    }

    #[test]
    fn heading_settles_on_command() {
        let (m, g, u) = controller();
        let mut s = AgentState::new(0, Point::zeros(), 0.0);
        let cmd = 2.5;
        for _ in 0..3000 {
            s = step_agent(&s, cmd, &m, &g, u).unwrap();
        }
        assert!(wrap_angle(s.heading() - cmd).abs() < 1f64.to_radians());
    }

    #[test]
    fn heading_error_takes_short_way_across_seam() {
        let (m, g, u) = controller();
        // From 170° to -170°: the short way is +20°, through ±180°.
        let mut s = AgentState::new(0, Point::zeros(), 170f64.to_radians());
        let cmd = (-170f64).to_radians();
        for _ in 0..10 {
            s = step_agent(&s, cmd, &m, &g, u).unwrap();
        }
        let h = s.heading();
        assert!(h > 170f64.to_radians() || h < -170f64.to_radians(), "h = {h}");
    }

    #[test]
    fn dead_agent_cannot_step() {
        let (m, g, u) = controller();
        let mut s = AgentState::new(3, Point::zeros(), 0.0);
        s.alive = false;
        assert_eq!(step_agent(&s, 0.0, &m, &g, u), Err(DynamicsError::DeadAgent(3)));
    }

    #[test]
    fn target_double_integrator() {
        let rest = TargetState { id: 0, position: Point::new(3.0, 4.0), velocity: Vector2::zeros() };
        assert_eq!(step_target(&rest, 0.01, &Vector2::zeros()), rest);

        let moving = TargetState { velocity: Vector2::new(1.0, 0.0), ..rest.clone() };
        let next = step_target(&moving, 0.01, &Vector2::zeros());
        assert!((next.position.x - 3.01).abs() < 1e-15);

        let next = step_target(&rest, 1.0, &Vector2::new(0.0, 2.0));
        assert_eq!(next.velocity, Vector2::new(0.0, 2.0));
        assert_eq!(next.position, Point::new(3.0, 5.0));
    }

    #[test]
    fn passing_a_waypoint() {
        let from = Point::new(0.0, 0.0);
        let wp = Point::new(100.0, 0.0);
        assert!(!passed_waypoint(&from, &wp, &Point::new(99.0, 40.0)));
        assert!(passed_waypoint(&from, &wp, &Point::new(101.0, -40.0)));
        assert!(!passed_waypoint(&wp, &wp, &Point::new(101.0, 0.0)));
    }

    #[test]
    fn waypoint_threshold_is_strict() {
        let g = GuidanceState::new(Some(0), vec![Point::new(10.1, 0.0), Point::new(100.0, 0.0)]);
        let o = Point::zeros();
        assert_eq!(advance_waypoint(&g, &o, 10.0).active, 0);
        let g = GuidanceState::new(Some(0), vec![Point::new(9.9, 0.0), Point::new(100.0, 0.0)]);
        let next = advance_waypoint(&g, &o, 10.0);
        assert_eq!(next.active, 1);
        assert!(!next.mission_complete);
    }

    #[test]
    fn last_waypoint_completes_mission() {
        let g = GuidanceState::new(Some(0), vec![Point::new(9.9, 0.0)]);
        let next = advance_waypoint(&g, &Point::zeros(), 10.0);
        assert!(next.mission_complete);
        assert_eq!(next.active, 1);
        assert_eq!(next.steer_point(), Some(&Point::new(9.9, 0.0)));
    }

    #[test]
    fn death_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut agents: Vec<_> = (0..4).map(|i| AgentState::new(i, Point::zeros(), 0.0)).collect();
        for _ in 0..1000 {
            assert!(death_process(&mut agents, 0.0, &mut rng).unwrap().is_empty());
        }
        assert_eq!(death_process(&mut agents, 1.0, &mut rng).unwrap(), vec![0, 1, 2, 3]);
        assert!(agents.iter().all(|a| !a.alive));
        assert!(death_process(&mut agents, 1.0, &mut rng).unwrap().is_empty());
        assert!(death_process(&mut agents, 1.5, &mut rng).is_err());
    }

    #[test]
    fn death_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let p = 0.05;
        let n = 10_000;
        let mut deaths = 0;
        for _ in 0..n {
            let mut agents = vec![AgentState::new(0, Point::zeros(), 0.0)];
            deaths += death_process(&mut agents, p, &mut rng).unwrap().len();
        }
        let freq = deaths as f64 / n as f64;
        assert!((freq - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "freq = {freq}");
    }
}
