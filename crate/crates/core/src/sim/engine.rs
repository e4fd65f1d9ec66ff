use std::collections::BTreeSet;

use nalgebra::{Matrix2, Vector2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::replan::{replan, replan_check, PlanContext};
use super::{
    AgentSummary, EventKind, Extraction, Extractions, ObjectKind, Outcome, PlanRecord,
    ScanRecord, SimClock, SimError, SimEvent, SimOptions, SimTrace, StepCounts, TruthRecord,
};
use crate::dynamics::{
    advance_waypoint, agent_controller, death_process, heading_command, passed_waypoint,
    step_agent, step_target, wrap_angle, AgentState, GuidanceState, LinearModel, LqrGain,
    TargetState,
};

use crate::planning::{plan_mission, MissionPlan, PlanOptions};
use crate::rfs::{
    generate_clutter, generate_measurements, GlmbFilter, Measurement, TruthTag,
};
use crate::scenario::{
    MissionArea, ModelParams, ObstacleSet, Point, Scenario, ScriptedDeath, TargetMotion,
};

/// A missed final point closer than this many waypoint thresholds, and
/// behind the agent, starts a go-around.
const GO_AROUND_TRIGGER: f64 = 5.0;
/// The go-around ends this many waypoint thresholds out.
const GO_AROUND_EXIT: f64 = 20.0;

/// Runs a scenario with its own seed and default options.
pub fn run_simulation(scenario: &Scenario) -> Result<SimTrace, SimError> {
    run_simulation_with(scenario, scenario.seed, SimOptions::default())
}

/// Runs a scenario to termination. The trace is a pure function of
/// `(scenario, seed, options)`.
pub fn run_simulation_with(
    scenario: &Scenario,
    seed: u64,
    options: SimOptions,
) -> Result<SimTrace, SimError> {
    let mut sim = Simulation::new(scenario, seed, options)?;
    while !sim.step()? {}
    Ok(sim.into_trace())
}

/// Mission state advanced one dynamics tick at a time.
pub struct Simulation {
    params: ModelParams,
    area: MissionArea,
    grid: crate::scenario::GridSpec,
    obstacles: ObstacleSet,
    motion: TargetMotion,
    options: SimOptions,
    clock: SimClock,
    end_tick: u64,
    rng: ChaCha8Rng,
    model: LinearModel,
    gain: LqrGain,
    meas_noise: Matrix2<f64>,
    accel_noise: Option<Normal<f64>>,
    agents: Vec<AgentState>,
    targets: Vec<TargetState>,
    guidance: Vec<GuidanceState>,
    /// Agent position when its current plan was applied.
    leg_origin: Vec<Point>,
    /// Flying straight out after overshooting the final point.
    go_around: Vec<bool>,
    /// Completion time and true target reached.
    completed: Vec<Option<(f64, usize)>>,
    death_time: Vec<Option<f64>>,
    scripted: Vec<ScriptedDeath>,
    agent_filter: GlmbFilter,
    target_filter: GlmbFilter,
    latest: Extractions,
    last_check: Option<Extractions>,
    replan_index: usize,
    trace: SimTrace,
    finished: bool,
}

impl Simulation {
    pub fn new(scenario: &Scenario, seed: u64, options: SimOptions) -> Result<Self, SimError> {
        scenario.validate()?;
        let params = scenario.params.clone();
        let realization = scenario.realize(seed)?;
        let (model, gain) = agent_controller(&params)?;

        let agents: Vec<AgentState> = realization
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| AgentState::new(i, Point::from(a.position), a.heading))
            .collect();
        let targets: Vec<TargetState> = realization
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| TargetState {
                id: i,
                position: Point::from(t.position),
                velocity: Vector2::from(t.velocity),
            })
            .collect();

        let plan_options = PlanOptions { cost_mode: options.cost_mode, assign_mode: options.assign_mode };
        let mut plan = plan_mission(
            &agents.iter().map(|a| (a.id, a.position)).collect::<Vec<_>>(),
            &targets.iter().map(|t| (t.id, t.position)).collect::<Vec<_>>(),
            &scenario.grid,
            &scenario.area,
            &realization.obstacles,
            plan_options,
        )?;
        plan.replan_index = 0;
        let mut guidance = vec![GuidanceState::default(); agents.len()];
        let mut leg_origin: Vec<Point> = agents.iter().map(|a| a.position).collect();
        apply_plan(&mut guidance, &mut leg_origin, &agents, &plan);

        let dt_filter = 1.0 / params.filter_rate;
        let agent_starts: Vec<Point> = agents.iter().map(|a| a.position).collect();
        let target_starts: Vec<Point> = targets.iter().map(|t| t.position).collect();
        // Each filter treats the other population's detections as clutter.
        let agent_filter = GlmbFilter::new(
            &agent_starts,
            &params.glmb,
            params.glmb.agent_process_noise,
            dt_filter,
            params.detect_prob,
            params.clutter_rate + params.detect_prob * targets.len() as f64,
            params.meas_noise_cov,
            &scenario.area,
        )?;
        let target_filter = GlmbFilter::new(
            &target_starts,
            &params.glmb,
            params.glmb.target_process_noise,
            dt_filter,
            params.detect_prob,
            params.clutter_rate + params.detect_prob * agents.len() as f64,
            params.meas_noise_cov,
            &scenario.area,
        )?;

        let dyn_rate = params.dyn_rate.round() as u64;
        let clock = SimClock::new(dyn_rate, params.dyn_per_filter(), params.dyn_per_replan());
        let max_time = options.max_time.unwrap_or(params.max_time);
        let end_tick = (max_time * dyn_rate as f64).round() as u64;
        let accel_noise = match scenario.target_motion {
            TargetMotion::Random => Some(
                Normal::new(0.0, (params.target_process_noise / clock.dt()).sqrt())
                    .map_err(|e| crate::scenario::ScenarioError::Invalid(e.to_string()))?,
            ),
            TargetMotion::Prescribed => None,
        };
        let m = params.meas_noise_cov;
        let meas_noise = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
        let mut scripted = scenario.scripted_deaths.clone();
        scripted.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.agent.cmp(&b.agent)));

        let n_agents = agents.len();
        let mut sim = Simulation {
            area: scenario.area,
            grid: scenario.grid,
            obstacles: realization.obstacles.clone(),
            motion: scenario.target_motion,
            options,
            clock,
            end_tick,
            rng: ChaCha8Rng::seed_from_u64(seed),
            model,
            gain,
            meas_noise,
            accel_noise,
            agents,
            targets,
            guidance,
            leg_origin,
            go_around: vec![false; n_agents],
            completed: vec![None; n_agents],
            death_time: vec![None; n_agents],
            scripted,
            agent_filter,
            target_filter,
            latest: Extractions::default(),
            last_check: None,
            replan_index: 0,
            trace: SimTrace {
                scenario: scenario.name.clone(),
                seed,
                obstacles: realization.obstacles,
                truth: Vec::new(),
                scans: Vec::new(),
                extractions: Vec::new(),
                plans: vec![PlanRecord { t: 0.0, plan }],
                events: Vec::new(),
                summary: Vec::new(),
                steps: StepCounts::default(),
                end_time: 0.0,
            },
            finished: false,
            params,
        };
        sim.record_truth();
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.clock.time()
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn targets(&self) -> &[TargetState] {
        &self.targets
    }

    pub fn guidance(&self) -> &[GuidanceState] {
        &self.guidance
    }

    pub fn latest_extractions(&self) -> &Extractions {
        &self.latest
    }

    pub fn trace(&self) -> &SimTrace {
        &self.trace
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn into_trace(self) -> SimTrace {
        self.trace
    }

    /// Advances one dynamics tick; returns true once the mission has ended.
    pub fn step(&mut self) -> Result<bool, SimError> {
        if self.finished {
            return Ok(true);
        }
        self.clock.tick += 1;
        self.trace.steps.dynamics += 1;
        let t = self.clock.time();

        self.step_targets();
        self.step_agents(t)?;

        if self.clock.is_filter_tick() {
            self.trace.steps.filter += 1;
            self.filter_tick(t)?;
        }
        if self.clock.is_replan_tick() {
            self.trace.steps.replan_checks += 1;
            self.replan_tick(t);
        }

        let all_done = (0..self.agents.len()).all(|i| {
            !self.agents[i].alive
                || self.completed[i].is_some()
                || self.guidance[i].assigned_target.is_none()
        });
        let capped = self.clock.tick >= self.end_tick;
        if all_done || capped {
            self.finish(t, all_done);
        } else if self.clock.tick.is_multiple_of(self.options.truth_every.max(1)) {
            self.record_truth();
        }
        Ok(self.finished)
    }

    fn step_targets(&mut self) {
        let dt = self.clock.dt();
        for target in &mut self.targets {
            let accel = match (&self.motion, &self.accel_noise) {
                (TargetMotion::Random, Some(n)) => {
                    Vector2::new(n.sample(&mut self.rng), n.sample(&mut self.rng))
                }
                _ => Vector2::zeros(),
            };
            let mut next = step_target(target, dt, &accel);
            reflect(&mut next, &self.area);
            *target = next;
        }
    }

    fn step_agents(&mut self, t: f64) -> Result<(), SimError> {
        let threshold = self.params.waypoint_threshold;
        for i in 0..self.agents.len() {
            let Some(assigned) = self.guidance[i].assigned_target else { continue };
            if !self.agents[i].alive || self.completed[i].is_some() {
                continue;
            }
            let pos = self.agents[i].position;
            let heading = self.agents[i].heading();
            let g = &self.guidance[i];
            let final_leg = g.active + 1 >= g.waypoints.len();
            let steer = if final_leg { self.final_point(i) } else { g.active_waypoint().copied() };

            let mut psi_cmd = heading;
            if let Some(p) = steer {
                let dist = (p - pos).norm();
                if final_leg && self.go_around[i] {
                    // Hold heading until far enough out to turn back in.
                    self.go_around[i] = dist < GO_AROUND_EXIT * threshold;
                } else if let Ok(bearing) = heading_command(&pos, &p) {
                    let behind = wrap_angle(bearing - heading).abs() > std::f64::consts::FRAC_PI_2;
                    if final_leg && behind && dist < GO_AROUND_TRIGGER * threshold {
                        self.go_around[i] = true;
                    } else {
                        psi_cmd = bearing;
                    }
                }
            }
            self.agents[i] = step_agent(
                &self.agents[i],
                psi_cmd,
                &self.model,
                &self.gain,
                self.params.forward_speed,
            )?;
            let pos = self.agents[i].position;

            let before = self.guidance[i].active;
            let had_waypoints = before < self.guidance[i].waypoints.len();
            let mut next = advance_waypoint(&self.guidance[i], &pos, threshold);
            // Intermediate waypoints also count once flown past.
            if next.active == before && before + 1 < next.waypoints.len() {
                let from = if before == 0 { self.leg_origin[i] } else { next.waypoints[before - 1] };
                if passed_waypoint(&from, &next.waypoints[before], &pos) {
                    next.active += 1;
                }
            }
            self.guidance[i] = next;
            if had_waypoints && self.guidance[i].active > before {
                self.trace.events.push(SimEvent {
                    t,
                    kind: EventKind::WaypointReached,
                    detail: format!("agent={i} waypoint={before}"),
                });
            }

            if let Some(target) = self.targets.get(assigned) {
                if (pos - target.position).norm() < threshold {
                    self.completed[i] = Some((t, assigned));
                    self.trace.events.push(SimEvent {
                        t,
                        kind: EventKind::TargetReached,
                        detail: format!("agent={i} target={assigned}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Final approach point: the latest estimate of the assigned target, or
    /// the last planned waypoint when the target filter has no track of it.
    fn final_point(&self, i: usize) -> Option<Point> {
        let g = &self.guidance[i];
        let assigned = g.assigned_target?;
        self.latest
            .targets
            .iter()
            .filter(|e| e.label.birth_index as usize == assigned)
            .min_by_key(|e| e.label)
            .map(|e| e.position)
            .or_else(|| g.waypoints.last().copied())
    }

    fn filter_tick(&mut self, t: f64) -> Result<(), SimError> {
        let mut measurements: Vec<Measurement> =
            generate_clutter(self.params.clutter_rate, &self.area, &mut self.rng)?
                .into_iter()
                .map(|z| Measurement { z, tag: TruthTag::Clutter })
                .collect();
        let agent_objs: Vec<(TruthTag, Point)> = self
            .agents
            .iter()
            .filter(|a| a.alive)
            .map(|a| (TruthTag::Agent(a.id), a.position))
            .collect();
        measurements.extend(generate_measurements(
            &agent_objs,
            self.params.detect_prob,
            &self.meas_noise,
            &mut self.rng,
        )?);
        let target_objs: Vec<(TruthTag, Point)> =
            self.targets.iter().map(|t| (TruthTag::Target(t.id), t.position)).collect();
        measurements.extend(generate_measurements(
            &target_objs,
            self.params.detect_prob,
            &self.meas_noise,
            &mut self.rng,
        )?);
        measurements.retain(|m| self.area.contains(&m.z));
        measurements.shuffle(&mut self.rng);

        let points: Vec<Point> = measurements.iter().map(|m| m.z).collect();
        let to_extractions = |est: Vec<crate::rfs::Estimate>| -> Vec<Extraction> {
            est.iter().map(|e| Extraction { label: e.label, position: e.position() }).collect()
        };
        let agents = to_extractions(self.agent_filter.process(&points)?);
        let targets = to_extractions(self.target_filter.process(&points)?);
        self.trace.scans.push(ScanRecord { t, measurements });

        for e in &agents {
            let id = e.label.birth_index as usize;
            if self.death_time.get(id).copied().flatten().is_some_and(|d| d < t) {
                self.trace.events.push(SimEvent {
                    t,
                    kind: EventKind::SpuriousExtraction,
                    detail: format!("label={} dead_agent={id}", e.label),
                });
            }
        }
        self.latest = Extractions { t, agents, targets };
        self.trace.extractions.push(self.latest.clone());

        self.run_deaths(t)?;
        Ok(())
    }

    fn run_deaths(&mut self, t: f64) -> Result<(), SimError> {
        let mut died = Vec::new();
        while let Some(d) = self.scripted.first() {
            if d.time > t + 1e-9 {
                break;
            }
            let d = self.scripted.remove(0);
            if let Some(a) = self.agents.get_mut(d.agent) {
                if a.alive && self.completed[d.agent].is_none() {
                    a.alive = false;
                    died.push(d.agent);
                }
            }
        }
        // Random deaths among agents still flying, in id order.
        let flying: Vec<usize> = (0..self.agents.len())
            .filter(|&i| self.agents[i].alive && self.completed[i].is_none())
            .collect();
        let mut subset: Vec<AgentState> = flying.iter().map(|&i| self.agents[i].clone()).collect();
        let random = death_process(&mut subset, self.params.death_prob_per_step, &mut self.rng)?;
        for (k, &i) in flying.iter().enumerate() {
            self.agents[i].alive = subset[k].alive;
        }
        died.extend(random);
        died.sort_unstable();
        for id in died {
            self.death_time[id] = Some(t);
            self.trace.events.push(SimEvent { t, kind: EventKind::Death, detail: format!("agent={id}") });
        }
        Ok(())
    }

    /// Extractions minus finished agents and serviced targets.
    fn active_picture(&self) -> Extractions {
        self.active_subset(&self.latest)
    }

    fn active_subset(&self, picture: &Extractions) -> Extractions {
        let finished = |id: u32| self.completed.get(id as usize).is_some_and(|c| c.is_some());
        let serviced: BTreeSet<usize> = self.completed.iter().flatten().map(|(_, tgt)| *tgt).collect();
        Extractions {
            t: picture.t,
            agents: picture.agents.iter().filter(|e| !finished(e.label.birth_index)).copied().collect(),
            targets: picture
                .targets
                .iter()
                .filter(|e| !serviced.contains(&(e.label.birth_index as usize)))
                .copied()
                .collect(),
        }
    }

    fn replan_tick(&mut self, t: f64) {
        // Both snapshots are filtered with today's exclusions so that an agent
        // finishing its mission is not mistaken for a loss.
        let current = self.active_picture();
        let flagged = match &self.last_check {
            None => false,
            Some(prev) => replan_check(&self.active_subset(prev), &current, self.params.movement_threshold),
        };
        self.last_check = Some(self.latest.clone());
        if !flagged {
            return;
        }
        let none = BTreeSet::new();
        let ctx = PlanContext {
            grid: &self.grid,
            area: &self.area,
            obstacles: &self.obstacles,
            options: PlanOptions {
                cost_mode: self.options.cost_mode,
                assign_mode: self.options.assign_mode,
            },
        };
        match replan(&current, &ctx, &none, &none, self.replan_index + 1) {
            Ok(plan) => {
                self.replan_index += 1;
                // Plans for unknown ids (never expected) are ignored.
                let plan = MissionPlan {
                    agents: plan.agents.into_iter().filter(|p| p.agent_id < self.agents.len()).collect(),
                    ..plan
                };
                apply_plan(&mut self.guidance, &mut self.leg_origin, &self.agents, &plan);
                for p in &plan.agents {
                    self.go_around[p.agent_id] = false;
                }
                let pairs: Vec<String> =
                    plan.agents.iter().map(|p| format!("{}->{}", p.agent_id, p.target_id)).collect();
                self.trace.events.push(SimEvent {
                    t,
                    kind: EventKind::Replan,
                    detail: format!("index={} assign={}", plan.replan_index, pairs.join(" ")),
                });
                self.trace.plans.push(PlanRecord { t, plan });
            }
            Err(e) => self.trace.events.push(SimEvent {
                t,
                kind: EventKind::ReplanFailed,
                detail: e.to_string(),
            }),
        }
    }

    fn record_truth(&mut self) {
        let t = self.clock.time();
        for a in &self.agents {
            self.trace.truth.push(TruthRecord {
                t,
                kind: ObjectKind::Agent,
                id: a.id,
                position: a.position,
                alive: a.alive,
            });
        }
        for tg in &self.targets {
            self.trace.truth.push(TruthRecord {
                t,
                kind: ObjectKind::Target,
                id: tg.id,
                position: tg.position,
                alive: true,
            });
        }
    }

    fn finish(&mut self, t: f64, all_done: bool) {
        self.record_truth();
        self.finished = true;
        self.trace.end_time = t;
        self.trace.events.push(SimEvent {
            t,
            kind: EventKind::Termination,
            detail: if all_done { "all agents finished".into() } else { "time cap".into() },
        });
        self.trace.summary = (0..self.agents.len())
            .map(|i| match (self.completed[i], self.death_time[i]) {
                (Some((tc, target)), _) => {
                    AgentSummary { id: i, outcome: Outcome::Completed, t_final: tc, target: Some(target) }
                }
                (None, Some(td)) => AgentSummary { id: i, outcome: Outcome::Dead, t_final: td, target: None },
                (None, None) => AgentSummary { id: i, outcome: Outcome::Incomplete, t_final: t, target: None },
            })
            .collect();
    }
}

fn apply_plan(
    guidance: &mut [GuidanceState],
    origins: &mut [Point],
    agents: &[AgentState],
    plan: &MissionPlan,
) {
    for p in &plan.agents {
        if let Some(g) = guidance.get_mut(p.agent_id) {
            *g = GuidanceState::new(Some(p.target_id), p.waypoints.clone());
            origins[p.agent_id] = agents[p.agent_id].position;
        }
    }
}

/// Mirrors a target that left the area back inside and flips the velocity
/// component normal to the crossed edge.
fn reflect(t: &mut TargetState, area: &MissionArea) {
    if t.position.x < area.x_min {
        t.position.x = 2.0 * area.x_min - t.position.x;
        t.velocity.x = t.velocity.x.abs();
    } else if t.position.x > area.x_max {
        t.position.x = 2.0 * area.x_max - t.position.x;
        t.velocity.x = -t.velocity.x.abs();
    }
    if t.position.y < area.y_min {
        t.position.y = 2.0 * area.y_min - t.position.y;
        t.velocity.y = t.velocity.y.abs();
    } else if t.position.y > area.y_max {
        t.position.y = 2.0 * area.y_max - t.position.y;
        t.velocity.y = -t.velocity.y.abs();
    }
    t.position = area.clamp(&t.position);
}
