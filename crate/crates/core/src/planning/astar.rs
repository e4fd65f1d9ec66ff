use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::scenario::{GridNode, GridSpec, ObstacleSet};

/// Move-cost convention for A*.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// 1 per orthogonal move, √2 per diagonal move. Admissible with the
    /// Euclidean heuristic, so returned paths are optimal.
    #[default]
    Octile,
    /// 1 per move regardless of direction (nodes traversed), with the same
    /// Euclidean heuristic. Not admissible on diagonals; kept for comparison.
    NodeCount,
}

impl CostMode {
    fn step(self, diagonal: bool) -> f64 {
        match (self, diagonal) {
            (CostMode::Octile, true) => std::f64::consts::SQRT_2,
            _ => 1.0,
        }
    }
}

/// Path through the grid from start to goal (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    pub nodes: Vec<GridNode>,
    pub cost: f64,
}

impl GridPath {
    /// Number of orthogonal and diagonal moves.
    pub fn move_counts(&self) -> (usize, usize) {
        let diag = self
            .nodes
            .windows(2)
            .filter(|w| w[0].row != w[1].row && w[0].col != w[1].col)
            .count();
        (self.nodes.len().saturating_sub(1) - diag, diag)
    }

    /// Path cost recomputed from move counts under `mode`.
    pub fn cost_under(&self, mode: CostMode) -> f64 {
        let (straight, diag) = self.move_counts();
        match mode {
            CostMode::Octile => straight as f64 + diag as f64 * std::f64::consts::SQRT_2,
            CostMode::NodeCount => (straight + diag) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Open {
    f: f64,
    g: f64,
    node: GridNode,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// BinaryHeap is a max-heap: "greater" pops first. Smallest f wins, then the
// larger g, then the lexicographically smaller node.
impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Shortest 8-connected path with octile move costs.
pub fn astar(
    grid: &GridSpec,
    obstacles: &ObstacleSet,
    start: GridNode,
    goal: GridNode,
) -> Result<GridPath, PlanError> {
    astar_with(grid, obstacles, start, goal, CostMode::Octile)
}

/// A* over the 8-connected grid with the Euclidean heuristic; obstacle nodes
/// are never expanded.
pub fn astar_with(
    grid: &GridSpec,
    obstacles: &ObstacleSet,
    start: GridNode,
    goal: GridNode,
    mode: CostMode,
) -> Result<GridPath, PlanError> {
    for (what, n) in [("start", start), ("goal", goal)] {
        if !grid.contains(n) {
            return Err(PlanError::InvalidEndpoint(format!("{what} {n} outside grid")));
        }
        if obstacles.contains(&n) {
            return Err(PlanError::InvalidEndpoint(format!("{what} {n} is an obstacle")));
        }
    }
    if start == goal {
        return Ok(GridPath { nodes: vec![start], cost: 0.0 });
    }

    let n = grid.len();
    let mut g_best = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    g_best[grid.index(start)] = 0.0;
    open.push(Open { f: start.euclidean(&goal), g: 0.0, node: start });

    while let Some(Open { g, node, .. }) = open.pop() {
        let idx = grid.index(node);
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if node == goal {
            let mut nodes = vec![node];
            let mut cur = idx;
            while let Some(p) = parent[cur] {
                nodes.push(grid.node(p));
                cur = p;
            }
            nodes.reverse();
            let mut path = GridPath { nodes, cost: 0.0 };
            // Recompute from move counts so equal-cost paths report bit-identical costs.
            path.cost = path.cost_under(mode);
            return Ok(path);
        }
        for next in grid.neighbors(node) {
            let nidx = grid.index(next);
            if closed[nidx] || obstacles.contains(&next) {
                continue;
            }
            let diagonal = next.row != node.row && next.col != node.col;
            let cand = g + mode.step(diagonal);
            if cand < g_best[nidx] {
                g_best[nidx] = cand;
                parent[nidx] = Some(idx);
                open.push(Open { f: cand + next.euclidean(&goal), g: cand, node: next });
            }
        }
    }
    Err(PlanError::NoPath { start, goal })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, n).unwrap()
    }

    #[test]
    fn degenerate_start_is_goal() {
        let p = astar(&grid(3), &ObstacleSet::new(), GridNode::new(1, 1), GridNode::new(1, 1)).unwrap();
        assert_eq!(p.nodes, vec![GridNode::new(1, 1)]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn empty_grid_diagonal() {
        let p = astar(&grid(3), &ObstacleSet::new(), GridNode::new(0, 0), GridNode::new(2, 2)).unwrap();
        assert_eq!(p.nodes.len(), 3);
        assert_eq!(p.move_counts(), (0, 2));
        let p = astar_with(
            &grid(3),
            &ObstacleSet::new(),
            GridNode::new(0, 0),
            GridNode::new(2, 2),
            CostMode::NodeCount,
        )
        .unwrap();
        assert_eq!(p.cost, 2.0);
    }

    #[test]
    fn walled_goal_has_no_path() {
        let g = grid(5);
        let wall = g.neighbors(GridNode::new(4, 4)).collect::<ObstacleSet>();
        assert!(matches!(
            astar(&g, &wall, GridNode::new(0, 0), GridNode::new(4, 4)),
            Err(PlanError::NoPath { .. })
        ));
    }

    #[test]
    fn obstacle_endpoints_rejected() {
        let g = grid(4);
        let obs: ObstacleSet = [GridNode::new(0, 0)].into_iter().collect();
        assert!(matches!(
            astar(&g, &obs, GridNode::new(0, 0), GridNode::new(3, 3)),
            Err(PlanError::InvalidEndpoint(_))
        ));
        assert!(matches!(
            astar(&g, &ObstacleSet::new(), GridNode::new(0, 0), GridNode::new(4, 3)),
            Err(PlanError::InvalidEndpoint(_))
        ));
    }

    #[test]
    fn detours_around_wall() {
        let g = grid(5);
        let wall: ObstacleSet = (0..4).map(|r| GridNode::new(r, 2)).collect();
        let p = astar(&g, &wall, GridNode::new(0, 0), GridNode::new(0, 4)).unwrap();
        assert!(p.nodes.iter().all(|n| !wall.contains(n)));
        assert!(p.nodes.windows(2).all(|w| w[0].is_adjacent(&w[1])));
        assert_eq!(p.nodes.first(), Some(&GridNode::new(0, 0)));
        assert_eq!(p.nodes.last(), Some(&GridNode::new(0, 4)));
        assert!((p.cost - p.cost_under(CostMode::Octile)).abs() < 1e-12);
    }
}
