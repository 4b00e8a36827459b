use std::path::Path;
use std::process::Command;

fn olplab(args: &[&str], workers: &str) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_olplab"))
        .args(args)
        .env("OLPLAB_WORKERS", workers)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "olplab {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const SMALL_PLAN: &str = r#"{
  "name": "small",
  "dist_label": "secretary",
  "arrivals": {"kind": "fixed", "spec": {"kind": "multi_secretary"}},
  "resources": {"kind": "fixed", "value": [0.5]},
  "setting": "continuous",
  "algorithms": [{"kind": "m1"}, {"kind": "m2"}, {"kind": "resolving", "every": null}],
  "horizons": [100, 300, 1000, 3000],
  "trials": 8,
  "seed": 17
}"#;

#[test]
fn repeated_runs_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    std::fs::write(&plan, SMALL_PLAN).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    olplab(&["run", plan.to_str().unwrap(), "--out", a.to_str().unwrap(), "--svg"], "1");
    olplab(&["run", plan.to_str().unwrap(), "--out", b.to_str().unwrap(), "--svg"], "4");
    for name in ["trials.csv", "aggregate.csv", "plot_secretary.dat", "plot_secretary.svg"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs");
    }
    assert!(read(&a, "trials.csv").lines().count() == 1 + 4 * 8 * 3);
}

#[test]
fn seed_flag_overrides_the_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    std::fs::write(&plan, SMALL_PLAN).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    olplab(&["run", plan.to_str().unwrap(), "--out", a.to_str().unwrap()], "2");
    olplab(&["--seed", "18", "run", plan.to_str().unwrap(), "--out", b.to_str().unwrap()], "2");
    assert_ne!(read(&a, "trials.csv"), read(&b, "trials.csv"));
}

#[test]
fn printed_scenario_config_runs_and_slopes_parse() {
    let tmp = tempfile::tempdir().unwrap();
    let printed = olplab(&["demo", "dilemma", "--print-config"], "1");
    let mut plan: serde_json::Value = serde_json::from_slice(&printed.stdout).unwrap();
    plan["trials"] = 4.into();
    plan["horizons"] = serde_json::json!([100, 1000, 10000, 20000]);
    let path = tmp.path().join("dilemma.json");
    std::fs::write(&path, plan.to_string()).unwrap();
    let out = tmp.path().join("out");
    olplab(&["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()], "1");
    let slopes = olplab(&["slope", out.join("aggregate.csv").to_str().unwrap()], "1");
    let text = String::from_utf8(slopes.stdout).unwrap();
    for algo in ["M1", "M2", "LAD"] {
        assert!(text.contains(&format!("{algo}: slope")), "{text}");
    }
    // the per-trial file aggregates to the same slopes
    let again = olplab(&["slope", out.join("trials.csv").to_str().unwrap()], "1");
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn timing_table_reports_wall_times() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("plan.json");
    std::fs::write(&plan, SMALL_PLAN).unwrap();
    let out = tmp.path().join("t");
    olplab(&["table", plan.to_str().unwrap(), "--out", out.to_str().unwrap()], "1");
    let table = read(&out, "timing.txt");
    assert!(table.starts_with(&format!("{:>8}  {:<10}", "T", "Algorithm")));
    assert!(!table.contains("NA"));
    assert_eq!(table.lines().count(), 1 + 4 * 3);
}

#[test]
fn unknown_scenario_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_olplab")).args(["demo", "nope"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
}
