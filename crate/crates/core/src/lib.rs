//! Swarm situational-awareness simulator.
//!
//! A central command tracks a swarm of fixed-wing agents and a set of targets
//! with two labeled multi-object filters, and re-plans agent/target
//! assignments plus grid trajectories whenever the estimates show an agent
//! loss or significant target motion.
//!
//! * [`scenario`]: mission definition, file format, grid mesh, obstacles.
//! * [`dynamics`]: agent lateral dynamics with LQR heading control, targets,
//!   waypoint guidance, death process.
//! * [`planning`]: A*, optimal assignment, mission plans.
//! * [`rfs`]: Gaussian mixtures, Bernoulli/multi-Bernoulli/GLMB densities and
//!   the GLMB filter recursion.
//! * [`sim`]: the multirate mission loop, traces and scoring.
//! * [`cli`]: command-line front end and trace file writers.

pub mod cli;
pub mod dynamics;
pub mod planning;
pub mod rfs;
pub mod scenario;
pub mod sim;
