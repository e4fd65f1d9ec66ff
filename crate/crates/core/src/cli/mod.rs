//! The `swarm-sa` command line: single runs, seeded batches, one-shot plans,
//! OSPA scoring of a written trace and regeneration of the figure datasets.

mod files;
mod score;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::planning::{plan_mission, AssignMode, CostMode, PlanError, PlanOptions};
use crate::scenario::{bundled, load_scenario, Scenario, ScenarioError};
use crate::sim::{run_simulation_with, SimError, SimOptions, SimTrace};

pub use files::{
    plan_rows, read_table, write_table, write_trace, EstimateRow, EventRow, Manifest, PlanRow,
    ScanRow, SummaryRow, TraceFormat, TruthRow, SCHEMA_VERSION,
};
pub use score::{score_dir, OspaRow, ScoreSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Parser)]
#[command(name = "swarm-sa", version, about = "Seeded swarm mission simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write its trace.
    Run(RunArgs),
    /// Plan once from the scenario's initial state and write plans.csv.
    Plan(PlanArgs),
    /// Per-scan OSPA and mission summary for a written trace.
    Score(ScoreArgs),
    /// Regenerate the figure-analog datasets from the bundled scenarios.
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario seed; batch run k uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    pub format: TraceFormat,
    /// Number of seeded runs; above 1 each goes to `<out>/seed_<n>`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    /// Record truth every this many dynamics ticks.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub decimate: u64,
    /// Count every grid move as 1 instead of octile costs.
    #[arg(long)]
    pub paper_cost: bool,
    /// Overrides the simulated-time cap (s).
    #[arg(long)]
    pub max_time: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Seed for random obstacles and targets; defaults to the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    pub format: TraceFormat,
    #[arg(long)]
    pub paper_cost: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Directory holding truth and estimate tables.
    #[arg(long)]
    pub out: PathBuf,
    /// OSPA cutoff c (m).
    #[arg(long, default_value_t = 100.0)]
    pub cutoff: f64,
    /// OSPA order p.
    #[arg(long, default_value_t = 2.0)]
    pub order: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    #[arg(long, default_value = "figures")]
    pub out: PathBuf,
    /// Seed for the first run of every scenario.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    pub format: TraceFormat,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub decimate: u64,
}

/// Parses `args` (program name first), runs the command and maps the result
/// to an exit status. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run(a) => cmd_run(a).map(|_| ()),
        Command::Plan(a) => cmd_plan(a),
        Command::Score(a) => {
            let s = score_dir(&a.out, a.cutoff, a.order)?;
            println!(
                "mean OSPA agents {:.3} targets {:.3}; completed {}/{}; replans {}; deaths {}",
                s.mean_ospa_agents, s.mean_ospa_targets, s.completed, s.agents, s.replans, s.deaths
            );
            Ok(())
        }
        Command::Figures(a) => cmd_figures(a),
    }
}

fn options(paper_cost: bool, decimate: u64, max_time: Option<f64>) -> SimOptions {
    SimOptions {
        truth_every: decimate,
        cost_mode: if paper_cost { CostMode::NodeCount } else { CostMode::Octile },
        assign_mode: AssignMode::Optimal,
        max_time,
    }
}

/// Runs one scenario `runs` times with seeds `seed..seed + runs` and writes
/// the traces. A single run writes straight into `out`.
pub fn run_batch(
    scenario: &Scenario,
    seed: u64,
    runs: u64,
    options: SimOptions,
    out: &Path,
    format: TraceFormat,
) -> Result<Vec<(u64, SimTrace)>, CliError> {
    let results: Vec<(u64, SimTrace)> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let s = seed + k;
            run_simulation_with(scenario, s, options).map(|t| (s, t))
        })
        .collect::<Result<_, _>>()?;
    for (s, trace) in &results {
        let dir = if runs == 1 { out.to_path_buf() } else { out.join(format!("seed_{s}")) };
        write_trace(trace, &dir, format)?;
    }
    Ok(results)
}

pub fn cmd_run(args: &RunArgs) -> Result<Vec<(u64, SimTrace)>, CliError> {
    if args.max_time.is_some_and(|t| !(t > 0.0)) {
        return Err(CliError::Invalid("--max-time must be positive".into()));
    }
    let scenario = load_scenario(&args.scenario)?;
    let seed = args.seed.unwrap_or(scenario.seed);
    let opts = options(args.paper_cost, args.decimate, args.max_time);
    let results = run_batch(&scenario, seed, args.runs, opts, &args.out, args.format)?;
    for (s, trace) in &results {
        println!(
            "{} seed {s}: {}/{} completed, {} deaths, {} replans, {:.2} s",
            trace.scenario,
            trace.completed_count(),
            trace.summary.len(),
            trace.death_count(),
            trace.replan_count(),
            trace.end_time
        );
    }
    Ok(results)
}

pub fn cmd_plan(args: &PlanArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let real = scenario.realize(args.seed.unwrap_or(scenario.seed))?;
    let agents: Vec<_> = real.agents.iter().enumerate().map(|(i, a)| (i, a.position.into())).collect();
    let targets: Vec<_> = real.targets.iter().enumerate().map(|(i, t)| (i, t.position.into())).collect();
    let cost_mode = if args.paper_cost { CostMode::NodeCount } else { CostMode::Octile };
    let plan = plan_mission(
        &agents,
        &targets,
        &scenario.grid,
        &scenario.area,
        &real.obstacles,
        PlanOptions { cost_mode, assign_mode: AssignMode::Optimal },
    )?;
    files::create_dir(&args.out)?;
    let path = write_table(&args.out, "plans", args.format, &plan_rows(0.0, &plan))?;
    for p in &plan.agents {
        println!("agent {} -> target {}: {} waypoints, cost {:.3}", p.agent_id, p.target_id, p.waypoints.len(), p.path.cost);
    }
    println!("wrote {}", path.display());
    Ok(())
}

/// Scenarios regenerated by `figures`, with the figure each one mirrors.
pub const FIGURE_SCENARIOS: [&str; 4] = ["fig3_analog", "fig4_analog", "fig6_analog", "fig8_analog"];

pub fn cmd_figures(args: &FiguresArgs) -> Result<(), CliError> {
    for name in FIGURE_SCENARIOS {
        let scenario = bundled::get(name).ok_or_else(|| CliError::Invalid(format!("no bundled scenario {name}")))?;
        let dir = args.out.join(name);
        let results = run_batch(&scenario, args.seed, args.runs, options(false, args.decimate, None), &dir, args.format)?;
        let done = results.iter().filter(|(_, t)| t.survivors_completed()).count();
        println!("{name}: {done}/{} runs with every survivor at a target -> {}", results.len(), dir.display());
    }
    Ok(())
}
