//! The multirate mission loop: 100 Hz dynamics and guidance, 1 Hz sensing,
//! filtering and death, 0.2 Hz re-planning from filter output.

mod engine;
mod ospa;
mod replan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::planning::{AssignMode, CostMode, MissionPlan, PlanError};
use crate::rfs::{Label, Measurement, RfsError};
use crate::scenario::{ObstacleSet, Point, ScenarioError};

pub use engine::{run_simulation, run_simulation_with, Simulation};
pub use ospa::ospa;
pub use replan::{replan, replan_check, PlanContext};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Filter(#[from] RfsError),
}

/// Tick arithmetic for the three loop rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    pub dyn_rate_hz: u64,
    pub tick: u64,
    pub per_filter: u64,
    pub per_replan: u64,
}

impl SimClock {
    pub fn new(dyn_rate_hz: u64, per_filter: u64, per_replan: u64) -> Self {
        SimClock { dyn_rate_hz, tick: 0, per_filter, per_replan }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.dyn_rate_hz as f64
    }

    /// Simulated time in seconds at the current tick.
    pub fn time(&self) -> f64 {
        self.tick as f64 / self.dyn_rate_hz as f64
    }

    pub fn is_filter_tick(&self) -> bool {
        self.tick > 0 && self.tick.is_multiple_of(self.per_filter)
    }

    pub fn is_replan_tick(&self) -> bool {
        self.tick > 0 && self.tick.is_multiple_of(self.per_replan)
    }
}

/// Options that are not part of the scenario file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Record truth every this many dynamics ticks (1 = full rate).
    pub truth_every: u64,
    pub cost_mode: CostMode,
    pub assign_mode: AssignMode,
    /// Overrides the scenario's simulated-time cap when set.
    pub max_time: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            truth_every: 10,
            cost_mode: CostMode::default(),
            assign_mode: AssignMode::default(),
            max_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Agent,
    Target,
}

impl std::fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObjectKind::Agent => "agent",
            ObjectKind::Target => "target",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub t: f64,
    pub kind: ObjectKind,
    pub id: usize,
    pub position: Point,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub t: f64,
    pub measurements: Vec<Measurement>,
}

/// Position estimate of one labeled track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub label: Label,
    pub position: Point,
}

/// Both filters' outputs at one filter tick.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extractions {
    pub t: f64,
    pub agents: Vec<Extraction>,
    pub targets: Vec<Extraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub t: f64,
    pub plan: MissionPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Death,
    Replan,
    /// Replan flagged but not carried out (no agent extractions, no
    /// reachable target, ...); the previous plan stays in force.
    ReplanFailed,
    WaypointReached,
    TargetReached,
    SpuriousExtraction,
    Termination,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EventKind::Death => "death",
            EventKind::Replan => "replan",
            EventKind::ReplanFailed => "replan_failed",
            EventKind::WaypointReached => "waypoint_reached",
            EventKind::TargetReached => "target_reached",
            EventKind::SpuriousExtraction => "spurious_extraction",
            EventKind::Termination => "termination",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Dead,
    /// Alive at the end without having reached a target.
    Incomplete,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Completed => "completed",
            Outcome::Dead => "dead",
            Outcome::Incomplete => "incomplete",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub id: usize,
    pub outcome: Outcome,
    pub t_final: f64,
    /// True target reached, for completed agents.
    pub target: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounts {
    pub dynamics: u64,
    pub filter: u64,
    pub replan_checks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub scenario: String,
    pub seed: u64,
    pub obstacles: ObstacleSet,
    pub truth: Vec<TruthRecord>,
    pub scans: Vec<ScanRecord>,
    pub extractions: Vec<Extractions>,
    pub plans: Vec<PlanRecord>,
    pub events: Vec<SimEvent>,
    pub summary: Vec<AgentSummary>,
    pub steps: StepCounts,
    pub end_time: f64,
}

impl SimTrace {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &SimEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn replan_count(&self) -> usize {
        self.events_of(EventKind::Replan).count()
    }

    pub fn death_count(&self) -> usize {
        self.events_of(EventKind::Death).count()
    }

    pub fn completed_count(&self) -> usize {
        self.summary.iter().filter(|s| s.outcome == Outcome::Completed).count()
    }

    /// Every agent that survived reached a target.
    pub fn survivors_completed(&self) -> bool {
        self.summary.iter().all(|s| s.outcome != Outcome::Incomplete)
    }

    /// Latest truth position of every object at or before `t`.
    pub fn truth_at(&self, kind: ObjectKind, t: f64) -> Vec<(usize, Point, bool)> {
        let mut latest: std::collections::BTreeMap<usize, (Point, bool)> = Default::default();
        for r in self.truth.iter().filter(|r| r.kind == kind && r.t <= t + 1e-9) {
            latest.insert(r.id, (r.position, r.alive));
        }
        latest.into_iter().map(|(id, (p, a))| (id, p, a)).collect()
    }
}
