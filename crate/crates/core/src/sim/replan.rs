use std::collections::BTreeSet;

use super::{Extraction, Extractions};
use crate::planning::{plan_mission, MissionPlan, PlanError, PlanOptions};
use crate::scenario::{GridSpec, MissionArea, ObstacleSet, Point};

/// Static planning inputs.
#[derive(Debug, Clone, Copy)]
pub struct PlanContext<'a> {
    pub grid: &'a GridSpec,
    pub area: &'a MissionArea,
    pub obstacles: &'a ObstacleSet,
    pub options: PlanOptions,
}

/// True when fewer agents are extracted than before, a target moved more
/// than `threshold`, or a target appeared at a birth index that had none.
/// Targets are identified by birth index (earliest label), so a second
/// track spawned on an already known target does not count as new.
pub fn replan_check(previous: &Extractions, current: &Extractions, threshold: f64) -> bool {
    let none = BTreeSet::new();
    if by_birth_index(&current.agents, &none).len() < by_birth_index(&previous.agents, &none).len() {
        return true;
    }
    let before = by_birth_index(&previous.targets, &none);
    by_birth_index(&current.targets, &none).iter().any(|(id, pos)| {
        match before.iter().find(|(p, _)| p == id) {
            Some((_, p)) => (pos - p).norm() > threshold,
            None => true,
        }
    })
}

/// One entry per birth index, keeping the earliest-born label.
fn by_birth_index(extractions: &[Extraction], exclude: &BTreeSet<usize>) -> Vec<(usize, Point)> {
    let mut sorted: Vec<&Extraction> = extractions.iter().collect();
    sorted.sort_by_key(|e| e.label);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for e in sorted {
        let id = e.label.birth_index as usize;
        if exclude.contains(&id) || !seen.insert(id) {
            continue;
        }
        out.push((id, e.position));
    }
    out.sort_by_key(|(id, _)| *id);
    out
}

/// Plans from filter output only: agent starts are the agent extractions and
/// goals the target extractions, both identified by birth index. Agents that
/// finished and targets already serviced are left out.
pub fn replan(
    extractions: &Extractions,
    ctx: &PlanContext<'_>,
    finished_agents: &BTreeSet<usize>,
    serviced_targets: &BTreeSet<usize>,
    replan_index: usize,
) -> Result<MissionPlan, PlanError> {
    let agents = by_birth_index(&extractions.agents, finished_agents);
    let targets = by_birth_index(&extractions.targets, serviced_targets);
    if agents.is_empty() {
        return Err(PlanError::Infeasible("no agent extractions".into()));
    }
    if targets.is_empty() {
        return Err(PlanError::Infeasible("no target extractions".into()));
    }
    let mut plan = plan_mission(&agents, &targets, ctx.grid, ctx.area, ctx.obstacles, ctx.options)?;
    plan.replan_index = replan_index;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfs::Label;

    fn ex(step: u32, idx: u32, x: f64, y: f64) -> Extraction {
        Extraction { label: Label::new(step, idx), position: Point::new(x, y) }
    }

    fn snapshot(agents: Vec<Extraction>, targets: Vec<Extraction>) -> Extractions {
        Extractions { t: 0.0, agents, targets }
    }

    #[test]
    fn identical_extractions_do_not_flag() {
        let s = snapshot(vec![ex(0, 0, 1.0, 1.0)], vec![ex(0, 0, 50.0, 50.0)]);
        assert!(!replan_check(&s, &s, 20.0));
    }

    #[test]
    fn missing_agent_flags() {
        let a = snapshot(vec![ex(0, 0, 1.0, 1.0), ex(0, 1, 5.0, 1.0)], vec![]);
        let b = snapshot(vec![ex(0, 0, 1.0, 1.0)], vec![]);
        assert!(replan_check(&a, &b, 20.0));
    }

    #[test]
    fn movement_threshold_boundary() {
        let a = snapshot(vec![], vec![ex(0, 0, 0.0, 0.0)]);
        let over = snapshot(vec![], vec![ex(0, 0, 20.1, 0.0)]);
        let under = snapshot(vec![], vec![ex(0, 0, 19.9, 0.0)]);
        assert!(replan_check(&a, &over, 20.0));
        assert!(!replan_check(&a, &under, 20.0));
    }

    #[test]
    fn new_target_label_flags() {
        let a = snapshot(vec![], vec![ex(0, 0, 0.0, 0.0)]);
        let b = snapshot(vec![], vec![ex(0, 0, 0.0, 0.0), ex(4, 1, 90.0, 0.0)]);
        assert!(replan_check(&a, &b, 20.0));
    }

    #[test]
    fn duplicate_track_on_known_target_does_not_flag() {
        let a = snapshot(vec![], vec![ex(0, 0, 0.0, 0.0)]);
        let b = snapshot(vec![], vec![ex(0, 0, 0.0, 0.0), ex(9, 0, 3.0, 0.0)]);
        assert!(!replan_check(&a, &b, 20.0));
    }

    #[test]
    fn earliest_label_wins_per_birth_index() {
        let v = by_birth_index(&[ex(7, 1, 9.0, 9.0), ex(0, 1, 1.0, 1.0), ex(0, 0, 0.0, 0.0)], &BTreeSet::new());
        assert_eq!(v, vec![(0, Point::new(0.0, 0.0)), (1, Point::new(1.0, 1.0))]);
    }

    #[test]
    fn three_agents_five_targets() {
        let grid = GridSpec::new(11, 11).unwrap();
        let area = MissionArea::new(0.0, 1000.0, 0.0, 1000.0).unwrap();
        let obstacles = ObstacleSet::new();
        let ctx = PlanContext { grid: &grid, area: &area, obstacles: &obstacles, options: Default::default() };
        let s = snapshot(
            vec![ex(0, 0, 100.0, 100.0), ex(0, 2, 100.0, 500.0), ex(0, 3, 100.0, 900.0)],
            (0..5).map(|i| ex(0, i, 900.0, 100.0 + 200.0 * i as f64)).collect(),
        );
        let plan = replan(&s, &ctx, &BTreeSet::new(), &BTreeSet::new(), 3).unwrap();
        assert_eq!(plan.replan_index, 3);
        assert_eq!(plan.agents.len(), 3);
        assert_eq!(plan.unassigned_targets.len(), 2);
    }
}
