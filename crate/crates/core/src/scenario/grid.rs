//! Mission area, A* grid discretization, and the mesh between them.

use std::collections::BTreeSet;

use nalgebra::Vector2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// World-frame position in meters.
pub type Point = Vector2<f64>;

/// Rectangular mission region in world coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionArea {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl MissionArea {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, ScenarioError> {
        let area = MissionArea { x_min, x_max, y_min, y_max };
        area.validate()?;
        Ok(area)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(ScenarioError::invalid(format!(
                "mission area requires x_min < x_max and y_min < y_max, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Surface area in m².
    pub fn size(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn clamp(&self, p: &Point) -> Point {
        Point::new(p.x.clamp(self.x_min, self.x_max), p.y.clamp(self.y_min, self.y_max))
    }
}

/// Number of A* nodes along each axis. Rows run along y, columns along x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_rows: usize,
    pub n_cols: usize,
}

impl GridSpec {
    pub fn new(n_rows: usize, n_cols: usize) -> Result<Self, ScenarioError> {
        let grid = GridSpec { n_rows, n_cols };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n_rows < 2 || self.n_cols < 2 {
            return Err(ScenarioError::invalid(format!(
                "grid needs at least 2 rows and 2 columns, got {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        Ok(())
    }

    pub fn contains(&self, node: GridNode) -> bool {
        node.row < self.n_rows && node.col < self.n_cols
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major linear index.
    pub fn index(&self, node: GridNode) -> usize {
        node.row * self.n_cols + node.col
    }

    pub fn node(&self, index: usize) -> GridNode {
        GridNode::new(index / self.n_cols, index % self.n_cols)
    }

    /// All nodes in row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = GridNode> + '_ {
        (0..self.n_rows).flat_map(move |r| (0..self.n_cols).map(move |c| GridNode::new(r, c)))
    }

    /// 8-connected neighbors inside the grid, in lexicographic order.
    pub fn neighbors(&self, node: GridNode) -> impl Iterator<Item = GridNode> + '_ {
        let (r, c) = (node.row as isize, node.col as isize);
        (-1isize..=1)
            .flat_map(move |dr| (-1isize..=1).map(move |dc| (r + dr, c + dc)))
            .filter(move |&(nr, nc)| (nr, nc) != (r, c))
            .filter(move |&(nr, nc)| {
                nr >= 0 && nc >= 0 && (nr as usize) < self.n_rows && (nc as usize) < self.n_cols
            })
            .map(|(nr, nc)| GridNode::new(nr as usize, nc as usize))
    }

    /// Node spacing (dx, dy) in meters for `area`.
    pub fn spacing(&self, area: &MissionArea) -> (f64, f64) {
        (
            area.width() / (self.n_cols - 1) as f64,
            area.height() / (self.n_rows - 1) as f64,
        )
    }
}

/// A* node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct GridNode {
    pub row: usize,
    pub col: usize,
}

impl GridNode {
    pub const fn new(row: usize, col: usize) -> Self {
        GridNode { row, col }
    }

    /// Euclidean distance in grid units.
    pub fn euclidean(&self, other: &GridNode) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        (dr * dr + dc * dc).sqrt()
    }

    pub fn is_adjacent(&self, other: &GridNode) -> bool {
        self != other && self.row.abs_diff(other.row) <= 1 && self.col.abs_diff(other.col) <= 1
    }
}

impl From<[usize; 2]> for GridNode {
    fn from(v: [usize; 2]) -> Self {
        GridNode::new(v[0], v[1])
    }
}

impl From<GridNode> for [usize; 2] {
    fn from(n: GridNode) -> Self {
        [n.row, n.col]
    }
}

impl std::fmt::Display for GridNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Set of blocked A* nodes. Ordered so iteration is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObstacleSet(BTreeSet<GridNode>);

impl ObstacleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_nodes(
        grid: &GridSpec,
        nodes: impl IntoIterator<Item = GridNode>,
    ) -> Result<Self, ScenarioError> {
        let mut set = BTreeSet::new();
        for node in nodes {
            if !grid.contains(node) {
                return Err(ScenarioError::invalid(format!(
                    "obstacle node {node} lies outside the {}x{} grid",
                    grid.n_rows, grid.n_cols
                )));
            }
            if !set.insert(node) {
                return Err(ScenarioError::invalid(format!("duplicate obstacle node {node}")));
            }
        }
        Ok(ObstacleSet(set))
    }

    pub fn contains(&self, node: &GridNode) -> bool {
        self.0.contains(node)
    }

    pub fn insert(&mut self, node: GridNode) -> bool {
        self.0.insert(node)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GridNode> {
        self.0.iter()
    }

    pub fn union(&self, other: &ObstacleSet) -> ObstacleSet {
        ObstacleSet(self.0.union(&other.0).copied().collect())
    }
}

impl FromIterator<GridNode> for ObstacleSet {
    fn from_iter<I: IntoIterator<Item = GridNode>>(iter: I) -> Self {
        ObstacleSet(iter.into_iter().collect())
    }
}

/// Draws one uniform number per node in row-major order; a non-protected node
/// becomes an obstacle when its draw is below `threshold`.
///
/// A draw is consumed for protected nodes too, so the result for the remaining
/// nodes does not depend on which nodes are protected.
pub fn generate_random_obstacles<R: Rng + ?Sized>(
    grid: &GridSpec,
    threshold: f64,
    protected: &BTreeSet<GridNode>,
    rng: &mut R,
) -> Result<ObstacleSet, ScenarioError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(ScenarioError::invalid(format!(
            "obstacle threshold must lie in [0, 1], got {threshold}"
        )));
    }
    if let Some(bad) = protected.iter().find(|n| !grid.contains(**n)) {
        return Err(ScenarioError::invalid(format!("protected node {bad} outside grid")));
    }
    let mut set = ObstacleSet::new();
    for node in grid.nodes() {
        let draw: f64 = rng.random();
        if draw < threshold && !protected.contains(&node) {
            set.insert(node);
        }
    }
    Ok(set)
}

/// Maps a grid node onto the mission area: (0, 0) lands on (x_min, y_min) and
/// the far corner node on (x_max, y_max).
pub fn grid_to_world(
    node: GridNode,
    grid: &GridSpec,
    area: &MissionArea,
) -> Result<Point, ScenarioError> {
    if !grid.contains(node) {
        return Err(ScenarioError::OutOfBounds(format!(
            "node {node} outside {}x{} grid",
            grid.n_rows, grid.n_cols
        )));
    }
    let (dx, dy) = grid.spacing(area);
    Ok(Point::new(
        area.x_min + node.col as f64 * dx,
        area.y_min + node.row as f64 * dy,
    ))
}

/// Nearest grid node to a world position. Positions up to one cell outside the
/// area are clamped onto the border; exact midpoints resolve to the lower index.
pub fn world_to_grid(
    pos: &Point,
    grid: &GridSpec,
    area: &MissionArea,
) -> Result<GridNode, ScenarioError> {
    let (dx, dy) = grid.spacing(area);
    let outside_x = (area.x_min - pos.x).max(pos.x - area.x_max);
    let outside_y = (area.y_min - pos.y).max(pos.y - area.y_max);
    if !pos.x.is_finite() || !pos.y.is_finite() || outside_x > dx || outside_y > dy {
        return Err(ScenarioError::OutOfBounds(format!(
            "position ({:.3}, {:.3}) lies more than one cell outside the mission area",
            pos.x, pos.y
        )));
    }
    let col = nearest_index((pos.x - area.x_min) / dx, grid.n_cols);
    let row = nearest_index((pos.y - area.y_min) / dy, grid.n_rows);
    Ok(GridNode::new(row, col))
}

fn nearest_index(frac: f64, n: usize) -> usize {
    let lower = frac.floor();
    let idx = if frac - lower > 0.5 { lower + 1.0 } else { lower };
    idx.clamp(0.0, (n - 1) as f64) as usize
}

/// Closest node (in grid units) to `node` that is not an obstacle; ties go to
/// the lexicographically smaller node. Returns `None` only for a fully blocked grid.
pub fn nearest_free_node(
    node: GridNode,
    grid: &GridSpec,
    obstacles: &ObstacleSet,
) -> Option<GridNode> {
    if !obstacles.contains(&node) {
        return Some(node);
    }
    grid.nodes()
        .filter(|n| !obstacles.contains(n))
        .map(|n| {
            let dr = n.row.abs_diff(node.row);
            let dc = n.col.abs_diff(node.col);
            (dr * dr + dc * dc, n)
        })
        .min()
        .map(|(_, n)| n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn area() -> MissionArea {
        MissionArea::new(0.0, 100.0, -50.0, 50.0).unwrap()
    }

    #[test]
    fn corners_anchor_to_area() {
        let grid = GridSpec::new(5, 9).unwrap();
        let a = area();
        assert_eq!(
            grid_to_world(GridNode::new(0, 0), &grid, &a).unwrap(),
            Point::new(0.0, -50.0)
        );
        assert_eq!(
            grid_to_world(GridNode::new(4, 8), &grid, &a).unwrap(),
            Point::new(100.0, 50.0)
        );
    }

    #[test]
    fn odd_grid_midpoint_is_area_center() {
        // 5 rows over [-50, 50] (dy = 25), 9 cols over [0, 100] (dx = 12.5).
        let grid = GridSpec::new(5, 9).unwrap();
        let p = grid_to_world(GridNode::new(2, 4), &grid, &area()).unwrap();
        assert_eq!(p, Point::new(50.0, 0.0));
    }

    #[test]
    fn out_of_bounds_node_rejected() {
        let grid = GridSpec::new(3, 3).unwrap();
        assert!(matches!(
            grid_to_world(GridNode::new(3, 0), &grid, &area()),
            Err(ScenarioError::OutOfBounds(_))
        ));
    }

    #[test]
    fn midpoint_ties_go_to_lower_index() {
        let grid = GridSpec::new(5, 9).unwrap();
        // Halfway between cols 2 and 3 (x = 25 and 37.5) and rows 1 and 2 (y = -25 and 0).
        let n = world_to_grid(&Point::new(31.25, -12.5), &grid, &area()).unwrap();
        assert_eq!(n, GridNode::new(1, 2));
    }

    #[test]
    fn clamps_within_one_cell_and_rejects_far_points() {
        let grid = GridSpec::new(5, 9).unwrap();
        let a = area();
        assert_eq!(
            world_to_grid(&Point::new(-5.0, 55.0), &grid, &a).unwrap(),
            GridNode::new(4, 0)
        );
        assert!(world_to_grid(&Point::new(-20.0, 0.0), &grid, &a).is_err());
        assert!(world_to_grid(&Point::new(10.0, f64::NAN), &grid, &a).is_err());
    }

    #[test]
    fn obstacle_threshold_extremes() {
        let grid = GridSpec::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let none = generate_random_obstacles(&grid, 0.0, &BTreeSet::new(), &mut rng).unwrap();
        assert!(none.is_empty());

        let protected: BTreeSet<_> = [GridNode::new(0, 0)].into_iter().collect();
        let all = generate_random_obstacles(&grid, 1.0, &protected, &mut rng).unwrap();
        let expected: ObstacleSet =
            [GridNode::new(0, 1), GridNode::new(1, 0), GridNode::new(1, 1)].into_iter().collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn obstacle_generation_is_reproducible() {
        let grid = GridSpec::new(10, 10).unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
            generate_random_obstacles(&grid, 0.3, &BTreeSet::new(), &mut rng).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert!(!a.is_empty());
    }

    #[test]
    fn obstacle_fraction_matches_threshold() {
        let grid = GridSpec::new(100, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in [0.1, 0.3, 0.5] {
            let set = generate_random_obstacles(&grid, t, &BTreeSet::new(), &mut rng).unwrap();
            let frac = set.len() as f64 / 10_000.0;
            let tol = 3.0 * (t * (1.0 - t) / 10_000.0f64).sqrt();
            assert!((frac - t).abs() <= tol, "t={t} frac={frac}");
        }
    }

    #[test]
    fn invalid_threshold_rejected() {
        let grid = GridSpec::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_random_obstacles(&grid, 1.5, &BTreeSet::new(), &mut rng).is_err());
    }

    #[test]
    fn obstacle_set_rejects_duplicates_and_out_of_grid() {
        let grid = GridSpec::new(3, 3).unwrap();
        assert!(ObstacleSet::from_nodes(&grid, [GridNode::new(1, 1), GridNode::new(1, 1)]).is_err());
        assert!(ObstacleSet::from_nodes(&grid, [GridNode::new(0, 3)]).is_err());
    }

    #[test]
    fn nearest_free_node_prefers_lexicographic_ties() {
        let grid = GridSpec::new(3, 3).unwrap();
        let obs = ObstacleSet::from_nodes(&grid, [GridNode::new(1, 1)]).unwrap();
        assert_eq!(
            nearest_free_node(GridNode::new(1, 1), &grid, &obs),
            Some(GridNode::new(0, 1))
        );
        assert_eq!(
            nearest_free_node(GridNode::new(2, 2), &grid, &obs),
            Some(GridNode::new(2, 2))
        );
    }

    #[test]
    fn neighbors_are_eight_connected() {
        let grid = GridSpec::new(3, 3).unwrap();
        assert_eq!(grid.neighbors(GridNode::new(1, 1)).count(), 8);
        assert_eq!(grid.neighbors(GridNode::new(0, 0)).count(), 3);
    }
}
