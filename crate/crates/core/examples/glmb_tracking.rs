//! Two objects crossing a 1 km square under clutter, tracked by one GLMB
//! filter. Prints the estimated count and positions every few scans.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarm_sa::rfs::{generate_clutter, generate_measurements, GlmbFilter, TruthTag};
use swarm_sa::scenario::{GlmbParams, MissionArea, Point};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let area = MissionArea::new(0.0, 1000.0, 0.0, 1000.0)?;
    let starts = [Point::new(100.0, 200.0), Point::new(100.0, 800.0)];
    let velocity = [Point::new(8.0, 3.0), Point::new(8.0, -3.0)];
    let (pd, clutter, noise) = (0.9, 5.0, [[4.0, 0.0], [0.0, 4.0]]);
    let mut filter = GlmbFilter::new(&starts, &GlmbParams::default(), 1.0, 1.0, pd, clutter, noise, &area)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = nalgebra::Matrix2::new(4.0, 0.0, 0.0, 4.0);

    for k in 1..=60 {
        let truth: Vec<(TruthTag, Point)> = (0..2)
            .map(|i| (TruthTag::Target(i), starts[i] + velocity[i] * k as f64))
            .collect();
        let mut scan: Vec<Point> = generate_measurements(&truth, pd, &r, &mut rng)?.iter().map(|m| m.z).collect();
        scan.extend(generate_clutter(clutter, &area, &mut rng)?);
        let estimates = filter.process(&scan)?;
        if k % 10 == 0 {
            let shown: Vec<String> = estimates
                .iter()
                .map(|e| {
                    let p = e.position();
                    format!("{} ({:.0}, {:.0})", e.label, p.x, p.y)
                })
                .collect();
            println!(
                "scan {k:>2}: {} measurements, {} hypotheses, {} objects: {}",
                scan.len(),
                filter.density.hypotheses.len(),
                estimates.len(),
                shown.join(", ")
            );
        }
    }
    Ok(())
}
