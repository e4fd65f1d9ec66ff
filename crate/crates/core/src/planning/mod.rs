//! Simultaneous target assignment and trajectory planning: A* for every
//! agent/target pair, optimal assignment over the path costs, and world-frame
//! waypoint lists through the grid mesh.

mod assignment;
mod astar;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{
    grid_to_world, nearest_free_node, world_to_grid, GridNode, GridSpec, MissionArea, ObstacleSet,
    Point, ScenarioError,
};

pub use assignment::{
    assign_greedy, assign_optimal, assign_unequal, hungarian, linear_sum_assignment,
    ranked_assignments, Assignment, CostMatrix, RankedAssignment,
};
pub use astar::{astar, astar_with, CostMode, GridPath};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no path from {start} to {goal}")]
    NoPath { start: GridNode, goal: GridNode },
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("assignment infeasible: {0}")]
    Infeasible(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("geometry: {0}")]
    Geometry(String),
}

impl From<ScenarioError> for PlanError {
    fn from(e: ScenarioError) -> Self {
        PlanError::Geometry(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignMode {
    /// Minimum total path cost.
    #[default]
    Optimal,
    /// Cheapest remaining pair first.
    Greedy,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub cost_mode: CostMode,
    pub assign_mode: AssignMode,
}

/// Route for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPlan {
    pub agent_id: usize,
    pub target_id: usize,
    pub path: GridPath,
    /// World-frame waypoints after the start node; the last one is the
    /// target's planned position.
    pub waypoints: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    pub replan_index: usize,
    /// One entry per assigned agent, in ascending agent id order.
    pub agents: Vec<AgentPlan>,
    pub unassigned_targets: Vec<usize>,
    pub unassigned_agents: Vec<usize>,
    pub total_cost: f64,
}

impl MissionPlan {
    pub fn for_agent(&self, agent_id: usize) -> Option<&AgentPlan> {
        self.agents.iter().find(|p| p.agent_id == agent_id)
    }

    pub fn target_of(&self, agent_id: usize) -> Option<usize> {
        self.for_agent(agent_id).map(|p| p.target_id)
    }
}

/// Grid node used for a world position: the nearest node, moved to the
/// nearest free node when it is an obstacle.
pub fn plan_node(
    pos: &Point,
    grid: &GridSpec,
    area: &MissionArea,
    obstacles: &ObstacleSet,
) -> Result<GridNode, PlanError> {
    let clamped = area.clamp(pos);
    let node = world_to_grid(&clamped, grid, area)?;
    nearest_free_node(node, grid, obstacles)
        .ok_or_else(|| PlanError::InvalidEndpoint("every grid node is an obstacle".into()))
}

/// Pairwise A* cost matrix (`+∞` where no path exists) and the paths.
pub fn cost_matrix(
    starts: &[GridNode],
    goals: &[GridNode],
    grid: &GridSpec,
    obstacles: &ObstacleSet,
    mode: CostMode,
) -> Result<(CostMatrix, Vec<Vec<Option<GridPath>>>), PlanError> {
    let mut costs = CostMatrix::new(starts.len(), goals.len(), f64::INFINITY);
    let mut paths = vec![vec![None; goals.len()]; starts.len()];
    for (i, &s) in starts.iter().enumerate() {
        for (j, &g) in goals.iter().enumerate() {
            match astar_with(grid, obstacles, s, g, mode) {
                Ok(p) => {
                    costs.set(i, j, p.cost);
                    paths[i][j] = Some(p);
                }
                Err(PlanError::NoPath { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok((costs, paths))
}

/// Plans every agent to a distinct target.
///
/// `agents` and `targets` are `(id, world position)` pairs. Runs A* for every
/// pair, assigns over the path costs, and maps each winning path to world
/// waypoints. The start node is dropped (the agent is already there) and the
/// list ends at the target's exact position.
pub fn plan_mission(
    agents: &[(usize, Point)],
    targets: &[(usize, Point)],
    grid: &GridSpec,
    area: &MissionArea,
    obstacles: &ObstacleSet,
    options: PlanOptions,
) -> Result<MissionPlan, PlanError> {
    if agents.is_empty() || targets.is_empty() {
        return Err(PlanError::Infeasible(format!(
            "{} agents and {} targets",
            agents.len(),
            targets.len()
        )));
    }
    let starts = agents
        .iter()
        .map(|(_, p)| plan_node(p, grid, area, obstacles))
        .collect::<Result<Vec<_>, _>>()?;
    let goals = targets
        .iter()
        .map(|(_, p)| plan_node(p, grid, area, obstacles))
        .collect::<Result<Vec<_>, _>>()?;
    let (costs, paths) = cost_matrix(&starts, &goals, grid, obstacles, options.cost_mode)?;

    if let Some(i) = (0..costs.rows()).find(|&i| (0..costs.cols()).all(|j| !costs.get(i, j).is_finite())) {
        return Err(PlanError::Infeasible(format!(
            "agent {} cannot reach any target",
            agents[i].0
        )));
    }

    let assignment = match options.assign_mode {
        AssignMode::Optimal => assign_optimal(&costs)?,
        AssignMode::Greedy => assign_greedy(&costs)?,
    };

    let mut plans = Vec::with_capacity(assignment.pairs.len());
    for &(i, j) in &assignment.pairs {
        let path = paths[i][j].clone().expect("assigned pair has a path");
        let target_pos = area.clamp(&targets[j].1);
        let target_node = world_to_grid(&target_pos, grid, area)?;
        let mut waypoints = path.nodes[1..]
            .iter()
            .map(|n| grid_to_world(*n, grid, area))
            .collect::<Result<Vec<_>, _>>()?;
        if path.nodes.last() == Some(&target_node) && path.nodes.len() > 1 {
            waypoints.pop();
        }
        waypoints.push(target_pos);
        plans.push(AgentPlan { agent_id: agents[i].0, target_id: targets[j].0, path, waypoints });
    }
    plans.sort_by_key(|p| p.agent_id);

    Ok(MissionPlan {
        replan_index: 0,
        agents: plans,
        unassigned_targets: assignment.unassigned_cols.iter().map(|&j| targets[j].0).collect(),
        unassigned_agents: assignment.unassigned_rows.iter().map(|&i| agents[i].0).collect(),
        total_cost: assignment.total,
    })
}
