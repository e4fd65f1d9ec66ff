//! Trace tables on disk. Every table exists as `<name>.csv` (header row) or
//! `<name>.jsonl` (one object per line) with the same columns.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::planning::MissionPlan;
use crate::rfs::Label;
use crate::sim::{Extraction, SimTrace};

/// Bumped whenever a column changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    #[default]
    Csv,
    Jsonl,
}

impl TraceFormat {
    fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub t: f64,
    pub kind: String,
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub truth_tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub t: f64,
    pub label_birth: u32,
    pub label_index: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub replan_index: usize,
    pub t: f64,
    pub agent_id: usize,
    pub target_id: usize,
    pub wp_seq: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub t: f64,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: usize,
    pub outcome: String,
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub format: TraceFormat,
    /// Filter ticks run, at `k * filter_period` for k = 1..=scans.
    pub scans: usize,
    pub filter_period: f64,
}

pub fn truth_rows(trace: &SimTrace) -> Vec<TruthRow> {
    trace
        .truth
        .iter()
        .map(|r| TruthRow {
            t: r.t,
            kind: r.kind.to_string(),
            id: r.id,
            x: r.position.x,
            y: r.position.y,
            alive: r.alive,
        })
        .collect()
}

pub fn scan_rows(trace: &SimTrace) -> Vec<ScanRow> {
    trace
        .scans
        .iter()
        .flat_map(|s| {
            s.measurements.iter().map(move |m| ScanRow {
                t: s.t,
                x: m.z.x,
                y: m.z.y,
                truth_tag: m.tag.to_string(),
            })
        })
        .collect()
}

fn estimate_rows(trace: &SimTrace, pick: fn(&crate::sim::Extractions) -> &[Extraction]) -> Vec<EstimateRow> {
    trace
        .extractions
        .iter()
        .flat_map(|x| {
            pick(x).iter().map(move |e| EstimateRow {
                t: x.t,
                label_birth: e.label.birth_step,
                label_index: e.label.birth_index,
                x: e.position.x,
                y: e.position.y,
            })
        })
        .collect()
}

pub fn plan_rows(t: f64, plan: &MissionPlan) -> Vec<PlanRow> {
    plan.agents
        .iter()
        .flat_map(|p| {
            p.waypoints.iter().enumerate().map(move |(k, w)| PlanRow {
                replan_index: plan.replan_index,
                t,
                agent_id: p.agent_id,
                target_id: p.target_id,
                wp_seq: k,
                x: w.x,
                y: w.y,
            })
        })
        .collect()
}

/// Writes every table of `trace` into `dir`, creating it if needed.
pub fn write_trace(trace: &SimTrace, dir: &Path, format: TraceFormat) -> Result<(), CliError> {
    create_dir(dir)?;
    write_table(dir, "truth", format, &truth_rows(trace))?;
    write_table(dir, "scans", format, &scan_rows(trace))?;
    write_table(dir, "estimates_agents", format, &estimate_rows(trace, |x| &x.agents))?;
    write_table(dir, "estimates_targets", format, &estimate_rows(trace, |x| &x.targets))?;
    let plans: Vec<PlanRow> = trace.plans.iter().flat_map(|p| plan_rows(p.t, &p.plan)).collect();
    write_table(dir, "plans", format, &plans)?;
    let events: Vec<EventRow> = trace
        .events
        .iter()
        .map(|e| EventRow { t: e.t, kind: e.kind.to_string(), detail: e.detail.clone() })
        .collect();
    write_table(dir, "events", format, &events)?;
    let summary: Vec<SummaryRow> = trace
        .summary
        .iter()
        .map(|s| SummaryRow { id: s.id, outcome: s.outcome.to_string(), t_final: s.t_final })
        .collect();
    write_table(dir, "summary", format, &summary)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        scenario: trace.scenario.clone(),
        seed: trace.seed,
        format,
        scans: trace.extractions.len(),
        filter_period: trace.extractions.first().map_or(0.0, |x| x.t),
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Format { path: path.clone(), msg: e.to_string() })?;
    std::fs::write(&path, text + "\n").map_err(|source| CliError::Io { path, source })
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

pub fn write_table<T: Serialize>(
    dir: &Path,
    name: &str,
    format: TraceFormat,
    rows: &[T],
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{name}.{}", format.extension()));
    let io_err = |source| CliError::Io { path: path.clone(), source };
    let fmt_err = |msg: String| CliError::Format { path: path.clone(), msg };
    let file = File::create(&path).map_err(io_err)?;
    match format {
        TraceFormat::Csv => {
            let mut w = csv::Writer::from_writer(file);
            if rows.is_empty() {
                w.write_record(header_of(name)).map_err(|e| fmt_err(e.to_string()))?;
            }
            for r in rows {
                w.serialize(r).map_err(|e| fmt_err(e.to_string()))?;
            }
            w.flush().map_err(io_err)?;
        }
        TraceFormat::Jsonl => {
            let mut w = BufWriter::new(file);
            for r in rows {
                let line = serde_json::to_string(r).map_err(|e| fmt_err(e.to_string()))?;
                writeln!(w, "{line}").map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
    }
    Ok(path)
}

// csv only emits a header alongside the first record; empty tables still
// get one so the schema is visible.
fn header_of(name: &str) -> &'static [&'static str] {
    match name {
        "truth" => &["t", "kind", "id", "x", "y", "alive"],
        "scans" => &["t", "x", "y", "truth_tag"],
        "estimates_agents" | "estimates_targets" => &["t", "label_birth", "label_index", "x", "y"],
        "plans" => &["replan_index", "t", "agent_id", "target_id", "wp_seq", "x", "y"],
        "events" => &["t", "kind", "detail"],
        "summary" => &["id", "outcome", "t_final"],
        "ospa" => &["t", "ospa_agents", "ospa_targets"],
        _ => &[],
    }
}

/// Reads `<name>.csv` or, failing that, `<name>.jsonl` from `dir`.
pub fn read_table<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>, CliError> {
    let csv_path = dir.join(format!("{name}.csv"));
    if csv_path.exists() {
        let mut r = csv::Reader::from_path(&csv_path)
            .map_err(|e| CliError::Format { path: csv_path.clone(), msg: e.to_string() })?;
        return r
            .deserialize()
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| CliError::Format { path: csv_path.clone(), msg: e.to_string() });
    }
    let path = dir.join(format!("{name}.jsonl"));
    let file = File::open(&path).map_err(|source| CliError::Io { path: csv_path.clone(), source })?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CliError::Io { path: path.clone(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line)
            .map_err(|e| CliError::Format { path: path.clone(), msg: format!("line {}: {e}", n + 1) })?;
        rows.push(row);
    }
    Ok(rows)
}

impl EstimateRow {
    pub fn label(&self) -> Label {
        Label::new(self.label_birth, self.label_index)
    }
}
