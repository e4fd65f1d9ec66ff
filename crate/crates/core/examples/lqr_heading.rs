//! LQR heading hold: the agent flies east, is commanded north, and the
//! heading error decays through the closed loop.

use swarm_sa::dynamics::{agent_controller, spectral_radius, step_agent, AgentState};
use swarm_sa::scenario::{ModelParams, Point};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::default();
    let (model, gain) = agent_controller(&params)?;
    let closed = gain.closed_loop(&model);
    let rho = spectral_radius(&nalgebra::DMatrix::from_column_slice(5, 5, closed.as_slice()));
    println!("K =\n{:.4}", gain.k);
    println!("closed-loop spectral radius {rho:.6} at dt = {} s", model.dt);

    let mut agent = AgentState::new(0, Point::new(0.0, 0.0), 0.0);
    let command = std::f64::consts::FRAC_PI_2;
    let per_second = (1.0 / model.dt).round() as usize;
    for s in 0..=20 {
        if s % 2 == 0 {
            println!(
                "t={s:>2}s heading {:>6.1} deg at ({:.0}, {:.0})",
                agent.heading().to_degrees(),
                agent.position.x,
                agent.position.y
            );
        }
        for _ in 0..per_second {
            agent = step_agent(&agent, command, &model, &gain, params.forward_speed)?;
        }
    }
    Ok(())
}
