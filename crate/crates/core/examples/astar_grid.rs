//! A* on a 12x12 grid with a wall, drawn as text. Octile costs versus the
//! node-count rule.

use swarm_sa::planning::{astar_with, CostMode};
use swarm_sa::scenario::{GridNode, GridSpec, ObstacleSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::new(12, 12)?;
    let wall = (1..11).map(|r| GridNode::new(r, 6)).chain((3..6).map(|c| GridNode::new(8, c)));
    let obstacles = ObstacleSet::from_nodes(&grid, wall)?;
    let (start, goal) = (GridNode::new(10, 1), GridNode::new(2, 10));

    for mode in [CostMode::Octile, CostMode::NodeCount] {
        let path = astar_with(&grid, &obstacles, start, goal, mode)?;
        let (straight, diagonal) = path.move_counts();
        println!("{mode:?}: cost {:.3}, {straight} straight + {diagonal} diagonal moves", path.cost);
        for r in (0..grid.n_rows).rev() {
            let line: String = (0..grid.n_cols)
                .map(|c| {
                    let n = GridNode::new(r, c);
                    if n == start {
                        'S'
                    } else if n == goal {
                        'G'
                    } else if obstacles.contains(&n) {
                        '#'
                    } else if path.nodes.contains(&n) {
                        '*'
                    } else {
                        '.'
                    }
                })
                .collect();
            println!("  {line}");
        }
    }
    Ok(())
}
