//! Four agents, four static targets, hand-placed walls, no clutter and no
//! losses. Every agent should reach its target without a single re-plan.

use swarm_sa::scenario::bundled;
use swarm_sa::sim::{run_simulation, EventKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = bundled::fig3_analog();
    let trace = run_simulation(&scenario)?;

    let plan = &trace.plans[0].plan;
    for p in &plan.agents {
        println!(
            "agent {} -> target {}: {} grid nodes, cost {:.3}",
            p.agent_id,
            p.target_id,
            p.path.nodes.len(),
            p.path.cost
        );
    }
    for s in &trace.summary {
        println!("agent {}: {} at t={:.2}s", s.id, s.outcome, s.t_final);
    }
    println!(
        "replans: {}, waypoints passed: {}, mission time {:.2}s",
        trace.replan_count(),
        trace.events_of(EventKind::WaypointReached).count(),
        trace.end_time
    );
    Ok(())
}
