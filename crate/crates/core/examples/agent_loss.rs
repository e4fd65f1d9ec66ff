//! Four agents, five moving targets, and agent 1 lost at t = 15 s. The loss
//! shows up in the agent filter a scan or two later, the next re-plan check
//! fires, and a survivor takes over the orphaned target.

use swarm_sa::scenario::bundled;
use swarm_sa::sim::{run_simulation, EventKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = run_simulation(&bundled::fig4_analog())?;

    for e in trace.events.iter().filter(|e| e.kind != EventKind::WaypointReached) {
        println!("t={:>7.2}  {:<20} {}", e.t, e.kind, e.detail);
    }
    let first = &trace.plans[0].plan;
    for rec in &trace.plans[1..] {
        for p in &rec.plan.agents {
            if first.target_of(p.agent_id) != Some(p.target_id) {
                println!(
                    "plan {}: agent {} rerouted from target {:?} to {}",
                    rec.plan.replan_index,
                    p.agent_id,
                    first.target_of(p.agent_id),
                    p.target_id
                );
            }
        }
    }
    for s in &trace.summary {
        println!("agent {}: {} at t={:.2}s", s.id, s.outcome, s.t_final);
    }
    Ok(())
}
