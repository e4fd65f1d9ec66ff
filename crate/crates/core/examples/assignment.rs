//! Three agents, five targets: optimal rectangular assignment, greedy
//! assignment and the next-best alternatives.

use swarm_sa::planning::{assign_greedy, assign_unequal, ranked_assignments, CostMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let costs = CostMatrix::from_rows(&[
        vec![4.0, 1.0, 3.0, 8.0, 6.0],
        vec![2.0, 0.5, 5.0, 7.0, 9.0],
        vec![3.0, 2.0, 2.5, 1.0, 4.0],
    ]);

    let best = assign_unequal(&costs)?;
    let greedy = assign_greedy(&costs)?;
    println!("optimal: {:?} total {:.2}", best.pairs, best.total);
    println!("greedy:  {:?} total {:.2}", greedy.pairs, greedy.total);
    println!("targets left over: {:?}", best.unassigned_cols);

    for (k, r) in ranked_assignments(&costs, 4).iter().enumerate() {
        println!("rank {k}: {:?} total {:.2}", r.cols, r.cost);
    }
    Ok(())
}
