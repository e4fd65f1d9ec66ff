//! Monte Carlo over seeds for one bundled scenario, in parallel.
//!
//! cargo run --release --example batch -- fig6_analog 50

use rayon::prelude::*;
use swarm_sa::scenario::bundled;
use swarm_sa::sim::{run_simulation_with, SimOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "fig6_analog".into());
    let runs: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let scenario = bundled::get(&name).ok_or_else(|| format!("unknown scenario {name}"))?;

    let results: Vec<_> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let seed = scenario.seed + k;
            run_simulation_with(&scenario, seed, SimOptions::default()).map(|t| (seed, t))
        })
        .collect::<Result<_, _>>()?;

    let mut ok = 0;
    for (seed, trace) in &results {
        let done = trace.survivors_completed();
        ok += done as usize;
        println!(
            "seed {seed:>4}: completed {} dead {} replans {} end {:.1}s{}",
            trace.completed_count(),
            trace.death_count(),
            trace.replan_count(),
            trace.end_time,
            if done { "" } else { "  INCOMPLETE" }
        );
    }
    println!("{name}: {ok}/{runs} runs with every survivor at a target");
    Ok(())
}
