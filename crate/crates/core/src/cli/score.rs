use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::files::{read_table, write_table, EstimateRow, EventRow, Manifest, SummaryRow, TraceFormat, TruthRow};
use super::CliError;
use crate::scenario::Point;
use crate::sim::ospa;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OspaRow {
    pub t: f64,
    pub ospa_agents: f64,
    pub ospa_targets: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub cutoff: f64,
    pub order: f64,
    pub scans: usize,
    pub mean_ospa_agents: f64,
    pub mean_ospa_targets: f64,
    pub agents: usize,
    pub completed: usize,
    pub completion_fraction: f64,
    pub replans: usize,
    pub deaths: usize,
}

/// Latest truth of each object of `kind` at or before `t`, living ones only.
fn truth_points(truth: &[TruthRow], kind: &str, t: f64) -> Vec<Point> {
    let mut latest: BTreeMap<usize, &TruthRow> = BTreeMap::new();
    for r in truth.iter().filter(|r| r.kind == kind && r.t <= t + 1e-9) {
        latest.insert(r.id, r);
    }
    latest.values().filter(|r| r.alive).map(|r| Point::new(r.x, r.y)).collect()
}

fn estimates_at(rows: &[EstimateRow], t: f64) -> Vec<Point> {
    rows.iter().filter(|r| (r.t - t).abs() < 1e-9).map(|r| Point::new(r.x, r.y)).collect()
}

/// Scores the trace in `dir` and writes `ospa.csv` and `metrics.json` next
/// to it. Scan times come from the manifest, so scans without any
/// extraction still count.
pub fn score_dir(dir: &Path, cutoff: f64, order: f64) -> Result<ScoreSummary, CliError> {
    if !(cutoff > 0.0) || !(order >= 1.0) {
        return Err(CliError::Invalid(format!("OSPA needs cutoff > 0 and order >= 1, got c={cutoff} p={order}")));
    }
    let truth: Vec<TruthRow> = read_table(dir, "truth")?;
    let agents_est: Vec<EstimateRow> = read_table(dir, "estimates_agents")?;
    let targets_est: Vec<EstimateRow> = read_table(dir, "estimates_targets")?;
    let events: Vec<EventRow> = read_table(dir, "events")?;
    let summary: Vec<SummaryRow> = read_table(dir, "summary")?;

    let manifest: Manifest = {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Format { path, msg: e.to_string() })?
    };
    let times: Vec<f64> = (1..=manifest.scans).map(|k| k as f64 * manifest.filter_period).collect();

    let rows: Vec<OspaRow> = times
        .iter()
        .map(|&t| OspaRow {
            t,
            ospa_agents: ospa(&estimates_at(&agents_est, t), &truth_points(&truth, "agent", t), cutoff, order),
            ospa_targets: ospa(&estimates_at(&targets_est, t), &truth_points(&truth, "target", t), cutoff, order),
        })
        .collect();
    write_table(dir, "ospa", TraceFormat::Csv, &rows)?;

    let mean = |f: fn(&OspaRow) -> f64| {
        if rows.is_empty() { 0.0 } else { rows.iter().map(f).sum::<f64>() / rows.len() as f64 }
    };
    let completed = summary.iter().filter(|s| s.outcome == "completed").count();
    let out = ScoreSummary {
        cutoff,
        order,
        scans: rows.len(),
        mean_ospa_agents: mean(|r| r.ospa_agents),
        mean_ospa_targets: mean(|r| r.ospa_targets),
        agents: summary.len(),
        completed,
        completion_fraction: if summary.is_empty() { 0.0 } else { completed as f64 / summary.len() as f64 },
        replans: events.iter().filter(|e| e.kind == "replan").count(),
        deaths: events.iter().filter(|e| e.kind == "death").count(),
    };
    let path = dir.join("metrics.json");
    let text = serde_json::to_string_pretty(&out).map_err(|e| CliError::Format { path: path.clone(), msg: e.to_string() })?;
    std::fs::write(&path, text + "\n").map_err(|source| CliError::Io { path, source })?;
    Ok(out)
}
