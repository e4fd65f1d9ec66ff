use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swarm_sa::dynamics::{agent_controller, death_process, heading_command, step_agent, wrap_angle, AgentState};
use swarm_sa::planning::{hungarian, CostMatrix};
use swarm_sa::rfs::{
    glmb_density, glmb_predict, glmb_update, prune_hypotheses, BernoulliTrack, BirthComponent,
    BirthModel, Gaussian, GaussianMixture, GlmbDensity, Label, MeasurementModel, MotionModel,
    PredictLimits, PruneLimits, UpdateLimits,
};
use swarm_sa::scenario::{grid_to_world, world_to_grid, GridNode, GridSpec, MissionArea, ModelParams, Point};
use swarm_sa::sim::ospa;

fn gm(x: f64, y: f64) -> GaussianMixture {
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![25.0, 25.0, 4.0, 4.0]));
    GaussianMixture::single(Gaussian::new(DVector::from_vec(vec![x, y, 0.0, 0.0]), cov).unwrap())
}

fn assert_normalized(d: &GlmbDensity) -> Result<(), TestCaseError> {
    prop_assert!((d.weight_sum() - 1.0).abs() < 1e-9, "hypothesis weights sum to {}", d.weight_sum());
    for t in &d.tracks {
        prop_assert!((t.mixture.weight_sum() - 1.0).abs() < 1e-9);
    }
    for h in &d.hypotheses {
        let labels: BTreeSet<Label> = h.tracks.iter().map(|&i| d.tracks[i].label).collect();
        prop_assert_eq!(labels.len(), h.tracks.len(), "duplicate label in a hypothesis");
    }
    Ok(())
}

fn brute(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut best = f64::INFINITY;
    let mut perm: Vec<usize> = (0..n).collect();
    // Heap's algorithm.
    let mut c = vec![0; n];
    let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| rows[i][j]).sum::<f64>();
    best = best.min(eval(&perm));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

proptest! {
    #[test]
    fn grid_round_trip(rows in 2usize..40, cols in 2usize..40, x0 in -1e4f64..1e4, w in 1.0f64..1e4, h in 1.0f64..1e4, seed in 0usize..1600) {
        let grid = GridSpec::new(rows, cols).unwrap();
        let area = MissionArea::new(x0, x0 + w, -x0, -x0 + h).unwrap();
        let node = GridNode::new(seed % rows, (seed / rows) % cols);
        let p = grid_to_world(node, &grid, &area).unwrap();
        prop_assert_eq!(world_to_grid(&p, &grid, &area).unwrap(), node);
    }

    #[test]
    fn wrapped_angles_stay_in_half_open_range(a in -1e3f64..1e3) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        prop_assert!(((a - w) / (2.0 * PI)).fract().abs() < 1e-6 || ((a - w) / (2.0 * PI)).fract().abs() > 1.0 - 1e-6);
    }

    #[test]
    fn heading_command_in_range(ax in -1e3f64..1e3, ay in -1e3f64..1e3, bx in -1e3f64..1e3, by in -1e3f64..1e3) {
        prop_assume!((ax, ay) != (bx, by));
        let psi = heading_command(&Point::new(ax, ay), &Point::new(bx, by)).unwrap();
        prop_assert!(psi > -PI && psi <= PI);
    }

    #[test]
    fn hungarian_matches_brute_force(n in 1usize..6, vals in prop::collection::vec(0u32..50, 36)) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| vals[i * 6 + j] as f64).collect()).collect();
        let a = hungarian(&CostMatrix::from_rows(&rows)).unwrap();
        prop_assert_eq!(a.total, brute(&rows));
    }

    #[test]
    fn ospa_is_a_bounded_symmetric_distance(
        xs in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 0..5),
        ys in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 0..5),
    ) {
        let x: Vec<Point> = xs.iter().map(|&(a, b)| Point::new(a, b)).collect();
        let y: Vec<Point> = ys.iter().map(|&(a, b)| Point::new(a, b)).collect();
        let d = ospa(&x, &y, 30.0, 2.0);
        prop_assert!((0.0..=30.0 + 1e-9).contains(&d));
        prop_assert!((d - ospa(&y, &x, 30.0, 2.0)).abs() < 1e-9);
        prop_assert!(ospa(&x, &x, 30.0, 2.0) < 1e-9);
    }

    #[test]
    fn glmb_cycle_stays_normalized(
        r in prop::collection::vec(0.05f64..0.95, 1..4),
        scans in prop::collection::vec(prop::collection::vec((0.0f64..200.0, 0.0f64..200.0), 0..4), 1..5),
        pd in 0.5f64..0.99,
    ) {
        let tracks: Vec<BernoulliTrack> = r
            .iter()
            .enumerate()
            .map(|(i, &ri)| BernoulliTrack::new(Label::new(0, i as u32), ri, gm(50.0 * i as f64, 50.0)).unwrap())
            .collect();
        let mut d = GlmbDensity::from_labeled_multi_bernoulli(&tracks);
        assert_normalized(&d)?;
        let motion = MotionModel::constant_velocity(1.0, 1.0);
        let meas = MeasurementModel::position(DMatrix::identity(2, 2) * 4.0);
        let birth = BirthModel { components: vec![BirthComponent { r: 0.05, mixture: gm(100.0, 100.0) }] };
        let prune = PruneLimits { weight_threshold: 1e-6, max_hypotheses: 50, gm_threshold: 1e-5, gm_cap: 5 };
        for (k, scan) in scans.iter().enumerate() {
            d = glmb_predict(&d, &motion, 0.95, &birth, k as u32 + 1, PredictLimits::default());
            assert_normalized(&d)?;
            let z: Vec<DVector<f64>> = scan.iter().map(|&(a, b)| DVector::from_vec(vec![a, b])).collect();
            d = glmb_update(&d, &z, &meas, pd, 1e-4, UpdateLimits::default()).unwrap();
            assert_normalized(&d)?;
            d = prune_hypotheses(&d, prune);
            assert_normalized(&d)?;
            for h in &d.hypotheses {
                if let [a, b, ..] = h.tracks[..] {
                    let x = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0]);
                    let dup = [(d.tracks[a].label, x.clone()), (d.tracks[a].label, x.clone())];
                    prop_assert_eq!(glmb_density(&d, &dup).unwrap(), 0.0);
                    prop_assert_ne!(d.tracks[a].label, d.tracks[b].label);
                }
            }
        }
    }

    #[test]
    fn dead_agents_stay_put(seed in 0u64..1000, p in 0.0f64..0.5) {
        let params = ModelParams::default();
        let (model, gain) = agent_controller(&params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut agents = vec![AgentState::new(0, Point::new(0.0, 0.0), 0.0), AgentState::new(1, Point::new(0.0, 50.0), 0.3)];
        let mut frozen: Vec<Option<Point>> = vec![None; 2];
        for _ in 0..20 {
            death_process(&mut agents, p, &mut rng).unwrap();
            for (a, f) in agents.iter_mut().zip(frozen.iter_mut()) {
                match (a.alive, *f) {
                    (true, Some(_)) => prop_assert!(false, "agent came back to life"),
                    (true, None) => *a = step_agent(a, 0.5, &model, &gain, params.forward_speed).unwrap(),
                    (false, None) => *f = Some(a.position),
                    (false, Some(p0)) => prop_assert_eq!(a.position, p0),
                }
            }
        }
    }
}
