use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_swarm-sa");

fn scenario(name: &str) -> String {
    format!("{}/scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"))
}

fn swarm(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = swarm(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_writes_every_table_with_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    ok(&["run", "--scenario", &scenario("fig3_analog"), "--out", out]);
    let headers = [
        ("truth.csv", "t,kind,id,x,y,alive"),
        ("scans.csv", "t,x,y,truth_tag"),
        ("estimates_agents.csv", "t,label_birth,label_index,x,y"),
        ("estimates_targets.csv", "t,label_birth,label_index,x,y"),
        ("plans.csv", "replan_index,t,agent_id,target_id,wp_seq,x,y"),
        ("events.csv", "t,kind,detail"),
        ("summary.csv", "id,outcome,t_final"),
    ];
    for (file, header) in headers {
        assert_eq!(read(tmp.path(), file).lines().next(), Some(header), "{file}");
    }
    let summary = read(tmp.path(), "summary.csv");
    assert_eq!(summary.lines().filter(|l| l.contains(",completed,")).count(), 4);
    assert!(read(tmp.path(), "manifest.json").contains("\"schema_version\": 1"));
}

#[test]
fn missing_scenario_names_the_path() {
    let out = swarm(&["run", "--scenario", "/no/such/scenario.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/scenario.toml"));
}

#[test]
fn bad_flags_are_rejected() {
    assert!(!swarm(&["run", "--scenario", &scenario("single_pair"), "--runs", "0"]).status.success());
    assert!(!swarm(&["run", "--scenario", &scenario("single_pair"), "--format", "xml"]).status.success());
    assert!(!swarm(&["frobnicate"]).status.success());
}

#[test]
fn batch_runs_match_standalone_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let batch = tmp.path().join("batch");
    let single = tmp.path().join("single");
    let s = scenario("fig4_analog");
    ok(&["run", "--scenario", &s, "--seed", "7", "--runs", "3", "--max-time", "30", "--out", batch.to_str().unwrap()]);
    let dirs: Vec<String> = {
        let mut v: Vec<String> =
            std::fs::read_dir(&batch).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
        v.sort();
        v
    };
    assert_eq!(dirs, ["seed_7", "seed_8", "seed_9"]);
    ok(&["run", "--scenario", &s, "--seed", "8", "--max-time", "30", "--out", single.to_str().unwrap()]);
    for f in ["truth.csv", "scans.csv", "estimates_agents.csv", "events.csv", "manifest.json"] {
        assert_eq!(read(&batch.join("seed_8"), f), read(&single, f), "{f}");
    }
}

#[test]
fn plan_on_open_field_is_a_straight_chain() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["plan", "--scenario", &scenario("single_pair"), "--out", tmp.path().to_str().unwrap()]);
    let plans = read(tmp.path(), "plans.csv");
    let ys: Vec<&str> = plans.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert!(ys.len() >= 2);
    assert!(ys.iter().all(|y| y.parse::<f64>().unwrap() == 1000.0), "{plans}");
}

#[test]
fn walled_in_agent_cannot_be_planned() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("walled.toml");
    std::fs::write(
        &path,
        r#"format_version = 1
name = "walled"
seed = 1
[area]
x_min = 0.0
x_max = 1000.0
y_min = 0.0
y_max = 1000.0
[grid]
n_rows = 11
n_cols = 11
[obstacles]
nodes = [[4, 4], [4, 5], [4, 6], [5, 4], [5, 6], [6, 4], [6, 5], [6, 6]]
[[agents]]
position = [500.0, 500.0]
[[targets]]
position = [900.0, 900.0]
"#,
    )
    .unwrap();
    let out = swarm(&["plan", "--scenario", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

fn write_synthetic(dir: &Path, extra_estimate: bool) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("truth.csv"), "t,kind,id,x,y,alive\n0.0,agent,0,10.0,10.0,true\n0.0,target,0,50.0,50.0,true\n").unwrap();
    let mut est = String::from("t,label_birth,label_index,x,y\n");
    for t in [1.0, 2.0] {
        est.push_str(&format!("{t:.1},0,0,10.0,10.0\n"));
        if extra_estimate {
            est.push_str(&format!("{t:.1},0,1,400.0,400.0\n"));
        }
    }
    std::fs::write(dir.join("estimates_agents.csv"), &est).unwrap();
    std::fs::write(dir.join("estimates_targets.csv"), "t,label_birth,label_index,x,y\n1.0,0,0,50.0,50.0\n2.0,0,0,50.0,50.0\n").unwrap();
    std::fs::write(dir.join("events.csv"), "t,kind,detail\n2.0,termination,time cap\n").unwrap();
    std::fs::write(dir.join("summary.csv"), "id,outcome,t_final\n0,incomplete,2.0\n").unwrap();
    std::fs::write(
        dir.join("manifest.json"),
        r#"{"schema_version":1,"scenario":"synthetic","seed":0,"format":"csv","scans":2,"filter_period":1.0}"#,
    )
    .unwrap();
}

#[test]
fn score_of_perfect_estimates_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    write_synthetic(tmp.path(), false);
    ok(&["score", "--out", tmp.path().to_str().unwrap()]);
    let ospa = read(tmp.path(), "ospa.csv");
    assert_eq!(ospa, "t,ospa_agents,ospa_targets\n1.0,0.0,0.0\n2.0,0.0,0.0\n");
}

#[test]
fn score_charges_the_cardinality_penalty() {
    let tmp = tempfile::tempdir().unwrap();
    write_synthetic(tmp.path(), true);
    ok(&["score", "--out", tmp.path().to_str().unwrap(), "--cutoff", "50", "--order", "1"]);
    // One matched point at distance 0 and one unmatched at c = 50: (0 + 50) / 2.
    let ospa = read(tmp.path(), "ospa.csv");
    assert_eq!(ospa.lines().nth(1), Some("1.0,25.0,0.0"));
    let metrics: serde_json::Value = serde_json::from_str(&read(tmp.path(), "metrics.json")).unwrap();
    assert_eq!(metrics["mean_ospa_agents"], 25.0);
    assert_eq!(metrics["completion_fraction"], 0.0);
}

#[test]
fn nominal_run_scores_within_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    ok(&["run", "--scenario", &scenario("fig3_analog"), "--format", "jsonl", "--out", out]);
    assert!(tmp.path().join("truth.jsonl").exists());
    ok(&["score", "--out", out]);
    let metrics: serde_json::Value = serde_json::from_str(&read(tmp.path(), "metrics.json")).unwrap();
    // Default measurement noise is 4 m^2 per axis.
    let bound = 3.0 * 4.0f64.sqrt();
    assert!(metrics["mean_ospa_agents"].as_f64().unwrap() < bound, "{metrics}");
    assert_eq!(metrics["completed"], 4);
    assert_eq!(metrics["replans"], 0);
}

#[test]
fn score_without_a_trace_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = swarm(&["score", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("truth.csv"));
}

#[test]
fn figures_regenerates_every_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&["figures", "--out", tmp.path().to_str().unwrap()]);
    for name in ["fig3_analog", "fig4_analog", "fig6_analog", "fig8_analog"] {
        assert!(tmp.path().join(name).join("summary.csv").exists(), "{name}");
        assert!(stdout.contains(name));
    }
}
