//! Mission scenarios: area, grid, obstacles, initial objects and model parameters.
//!
//! Scenarios are stored as TOML documents (see `docs/scenario-format.md`).
//! Unknown keys are rejected so typos surface at load time.

mod grid;
mod params;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{
    generate_random_obstacles, grid_to_world, nearest_free_node, world_to_grid, GridNode,
    GridSpec, MissionArea, ObstacleSet, Point,
};
pub use params::{GlmbParams, LateralModelParams, ModelParams};

/// Current scenario file format version.
pub const FORMAT_VERSION: u32 = 1;

/// RNG stream used for scenario realization (obstacles, random targets).
/// The simulation itself draws from stream 0.
pub const SETUP_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
}

impl ScenarioError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ScenarioError::Invalid(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentInit {
    pub position: [f64; 2],
    /// Initial heading (rad, east = 0, counterclockwise positive).
    #[serde(default)]
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetInit {
    pub position: [f64; 2],
    #[serde(default)]
    pub velocity: [f64; 2],
}

/// Targets whose start positions and velocities are drawn from Gaussians at
/// realization time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTargets {
    pub count: usize,
    pub center: [f64; 2],
    pub position_std: f64,
    #[serde(default)]
    pub velocity_std: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMotion {
    /// Constant prescribed velocity.
    #[default]
    Prescribed,
    /// Gaussian acceleration noise at the dynamics rate.
    Random,
}

/// Forces an agent's death at the first death-process tick at or after `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedDeath {
    pub agent: usize,
    pub time: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    /// Hand-placed obstacle nodes `[row, col]`.
    #[serde(default)]
    pub nodes: Vec<GridNode>,
    /// Per-node obstacle probability for random placement (0 disables it).
    #[serde(default)]
    pub random_threshold: f64,
}

/// A complete mission definition, mirroring the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub area: MissionArea,
    pub grid: GridSpec,
    #[serde(default)]
    pub obstacles: ObstacleSpec,
    pub agents: Vec<AgentInit>,
    #[serde(default)]
    pub targets: Vec<TargetInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_targets: Option<RandomTargets>,
    #[serde(default)]
    pub target_motion: TargetMotion,
    #[serde(default)]
    pub scripted_deaths: Vec<ScriptedDeath>,
    #[serde(default)]
    pub params: ModelParams,
}

/// Concrete initial conditions for one seed: the scenario with every random
/// element drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub obstacles: ObstacleSet,
    pub agents: Vec<AgentInit>,
    pub targets: Vec<TargetInit>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let text = self.to_toml_string()?;
        std::fs::write(path, text).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len() + self.random_targets.as_ref().map_or(0, |r| r.count)
    }

    /// Checks every scenario invariant, naming the first violation.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ScenarioError::invalid(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.area.validate()?;
        self.grid.validate()?;
        self.params.validate()?;
        if self.agents.is_empty() {
            return Err(ScenarioError::invalid("at least one agent is required"));
        }
        if self.n_targets() < self.agents.len() {
            return Err(ScenarioError::invalid(format!(
                "need at least as many targets as agents ({} targets, {} agents)",
                self.n_targets(),
                self.agents.len()
            )));
        }
        for (i, a) in self.agents.iter().enumerate() {
            let p = Point::from(a.position);
            if !self.area.contains(&p) {
                return Err(ScenarioError::invalid(format!(
                    "agent {i} at ({}, {}) lies outside the mission area",
                    p.x, p.y
                )));
            }
            if !a.heading.is_finite() {
                return Err(ScenarioError::invalid(format!("agent {i} heading is not finite")));
            }
        }
        for (i, t) in self.targets.iter().enumerate() {
            let p = Point::from(t.position);
            if !self.area.contains(&p) {
                return Err(ScenarioError::invalid(format!(
                    "target {i} at ({}, {}) lies outside the mission area",
                    p.x, p.y
                )));
            }
            if !t.velocity.iter().all(|v| v.is_finite()) {
                return Err(ScenarioError::invalid(format!("target {i} velocity is not finite")));
            }
        }
        if let Some(r) = &self.random_targets {
            let c = Point::from(r.center);
            if !self.area.contains(&c) {
                return Err(ScenarioError::invalid("random_targets.center lies outside the area"));
            }
            if !(r.position_std.is_finite() && r.position_std >= 0.0)
                || !(r.velocity_std.is_finite() && r.velocity_std >= 0.0)
            {
                return Err(ScenarioError::invalid(
                    "random_targets standard deviations must be non-negative",
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.obstacles.random_threshold) {
            return Err(ScenarioError::invalid(format!(
                "obstacles.random_threshold must lie in [0, 1], got {}",
                self.obstacles.random_threshold
            )));
        }
        let hand = ObstacleSet::from_nodes(&self.grid, self.obstacles.nodes.iter().copied())?;
        let explicit_starts = self
            .agents
            .iter()
            .map(|a| a.position)
            .chain(self.targets.iter().map(|t| t.position));
        for pos in explicit_starts {
            let node = world_to_grid(&Point::from(pos), &self.grid, &self.area)?;
            if hand.contains(&node) {
                return Err(ScenarioError::invalid(format!(
                    "obstacle node {node} covers a start location ({}, {})",
                    pos[0], pos[1]
                )));
            }
        }
        for d in &self.scripted_deaths {
            if d.agent >= self.agents.len() {
                return Err(ScenarioError::invalid(format!(
                    "scripted death names unknown agent {}",
                    d.agent
                )));
            }
            if !(d.time.is_finite() && d.time >= 0.0) {
                return Err(ScenarioError::invalid("scripted death time must be non-negative"));
            }
        }
        Ok(())
    }

    /// Draws random targets and random obstacles for `seed`. Hand-placed
    /// obstacles are always present; random ones never cover a start node.
    pub fn realize(&self, seed: u64) -> Result<Realization, ScenarioError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SETUP_STREAM);

        let mut targets = self.targets.clone();
        if let Some(spec) = &self.random_targets {
            targets.extend(self.draw_random_targets(spec, &mut rng)?);
        }

        let mut protected = BTreeSet::new();
        for pos in self.agents.iter().map(|a| a.position).chain(targets.iter().map(|t| t.position)) {
            protected.insert(world_to_grid(&Point::from(pos), &self.grid, &self.area)?);
        }
        let hand = ObstacleSet::from_nodes(&self.grid, self.obstacles.nodes.iter().copied())?;
        let obstacles = if self.obstacles.random_threshold > 0.0 {
            let random = generate_random_obstacles(
                &self.grid,
                self.obstacles.random_threshold,
                &protected,
                &mut rng,
            )?;
            hand.union(&random)
        } else {
            hand
        };
        Ok(Realization { obstacles, agents: self.agents.clone(), targets })
    }

    fn draw_random_targets<R: Rng>(
        &self,
        spec: &RandomTargets,
        rng: &mut R,
    ) -> Result<Vec<TargetInit>, ScenarioError> {
        let pos_noise = Normal::new(0.0, spec.position_std)
            .map_err(|e| ScenarioError::invalid(e.to_string()))?;
        let vel_noise = Normal::new(0.0, spec.velocity_std)
            .map_err(|e| ScenarioError::invalid(e.to_string()))?;
        let mut out = Vec::with_capacity(spec.count);
        for _ in 0..spec.count {
            // Redraw until inside the area; clamp as a last resort.
            let mut pos = Point::from(spec.center);
            for _ in 0..100 {
                let cand = Point::new(
                    spec.center[0] + pos_noise.sample(rng),
                    spec.center[1] + pos_noise.sample(rng),
                );
                if self.area.contains(&cand) {
                    pos = cand;
                    break;
                }
            }
            let pos = self.area.clamp(&pos);
            let velocity = [vel_noise.sample(rng), vel_noise.sample(rng)];
            out.push(TargetInit { position: [pos.x, pos.y], velocity });
        }
        Ok(out)
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_toml_str(&text)
}

/// Scenario files shipped with the crate.
pub mod bundled {
    use super::Scenario;

    pub const FIG3_ANALOG: &str = include_str!("../../scenarios/fig3_analog.toml");
    pub const FIG4_ANALOG: &str = include_str!("../../scenarios/fig4_analog.toml");
    pub const FIG6_ANALOG: &str = include_str!("../../scenarios/fig6_analog.toml");
    pub const FIG8_ANALOG: &str = include_str!("../../scenarios/fig8_analog.toml");
    pub const SINGLE_PAIR: &str = include_str!("../../scenarios/single_pair.toml");

    /// All bundled scenarios as `(name, toml text)`.
    pub const ALL: [(&str, &str); 5] = [
        ("fig3_analog", FIG3_ANALOG),
        ("fig4_analog", FIG4_ANALOG),
        ("fig6_analog", FIG6_ANALOG),
        ("fig8_analog", FIG8_ANALOG),
        ("single_pair", SINGLE_PAIR),
    ];

    pub fn get(name: &str) -> Option<Scenario> {
        ALL.iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Scenario::from_toml_str(text).expect("bundled scenario is valid"))
    }

    pub fn fig3_analog() -> Scenario {
        get("fig3_analog").unwrap()
    }

    pub fn fig4_analog() -> Scenario {
        get("fig4_analog").unwrap()
    }

    pub fn fig6_analog() -> Scenario {
        get("fig6_analog").unwrap()
    }

    pub fn fig8_analog() -> Scenario {
        get("fig8_analog").unwrap()
    }

    pub fn single_pair() -> Scenario {
        get("single_pair").unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
format_version = 1
seed = 5
area = { x_min = 0.0, x_max = 100.0, y_min = 0.0, y_max = 100.0 }
grid = { n_rows = 11, n_cols = 11 }

[[agents]]
position = [10.0, 50.0]

[[targets]]
position = [90.0, 50.0]
"#;

    #[test]
    fn minimal_file_loads_with_empty_obstacles() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.agents.len(), 1);
        assert_eq!(s.targets.len(), 1);
        assert!(s.obstacles.nodes.is_empty());
        assert_eq!(s.params, ModelParams::default());
        assert!(s.realize(s.seed).unwrap().obstacles.is_empty());
    }

    #[test]
    fn agent_outside_area_rejected() {
        let text = MINIMAL.replace("[10.0, 50.0]", "[-10.0, 50.0]");
        let err = Scenario::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("agent 0"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("seed = 5", "seed = 5\nsede = 6");
        assert!(matches!(Scenario::from_toml_str(&text), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn fewer_targets_than_agents_rejected() {
        let text = format!("{MINIMAL}\n[[agents]]\nposition = [10.0, 20.0]\n");
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn zero_targets_rejected() {
        let text = MINIMAL.replace("[[targets]]\nposition = [90.0, 50.0]\n", "");
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn obstacle_on_start_rejected() {
        let text = MINIMAL.replace(
            "grid = { n_rows = 11, n_cols = 11 }",
            "grid = { n_rows = 11, n_cols = 11 }\nobstacles = { nodes = [[5, 1]] }",
        );
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn fig3_bundle_has_four_pairs_and_obstacles() {
        let s = bundled::fig3_analog();
        assert_eq!(s.agents.len(), 4);
        assert_eq!(s.targets.len(), 4);
        assert!(!s.obstacles.nodes.is_empty());
        assert_eq!(s.obstacles.random_threshold, 0.0);
    }

    #[test]
    fn all_bundles_validate_and_roundtrip() {
        for (name, text) in bundled::ALL {
            let s = Scenario::from_toml_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = Scenario::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
            assert_eq!(s, again, "{name}");
        }
    }

    #[test]
    fn save_then_load_is_identity() {
        let s = bundled::fig8_analog();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        s.save(&path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_scenario(Path::new("/nonexistent/scenario.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/scenario.toml"));
    }

    #[test]
    fn realization_is_seeded_and_protects_starts() {
        let s = bundled::fig8_analog();
        let a = s.realize(3).unwrap();
        assert_eq!(a, s.realize(3).unwrap());
        assert_ne!(a.targets, s.realize(4).unwrap().targets);
        for pos in a.agents.iter().map(|x| x.position).chain(a.targets.iter().map(|t| t.position)) {
            let node = world_to_grid(&Point::from(pos), &s.grid, &s.area).unwrap();
            assert!(!a.obstacles.contains(&node));
            assert!(s.area.contains(&Point::from(pos)));
        }
    }
}
