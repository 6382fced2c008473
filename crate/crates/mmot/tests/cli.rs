//! Binary-level checks of the `mmot` CLI: exit codes, artifact shapes,
//! the `"inf"` token, and byte-identical reports across reruns and
//! worker counts.

use std::fs;
use std::path::Path;
use std::process::Command;

fn mmot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmot"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

const GOLDEN_MEASURE: &str = r#"{
  "dimension": 1,
  "atoms": [
    { "position": [0.0], "weight": 0.5 },
    { "position": [1.0], "weight": 0.5 }
  ]
}"#;

fn solve_config(dir: &Path) -> String {
    format!(
        r#"{{
  "task": "solve",
  "measures": {{ "files": ["{}"], "n": 2 }},
  "cost": {{ "kind": "power", "exponent": 1.0, "truncation": null }},
  "outputs": {{ "dir": "{}" }}
}}"#,
        dir.join("measure.json").display(),
        dir.join("out").display()
    )
}

#[test]
fn solve_golden_instance_exits_zero_with_value_one() {
    let tmp = tempfile::tempdir().unwrap();
    write(&tmp.path().join("measure.json"), GOLDEN_MEASURE);
    write(&tmp.path().join("config.json"), &solve_config(tmp.path()));
    let output = mmot()
        .arg("solve")
        .arg("--config")
        .arg(tmp.path().join("config.json"))
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("value = 1"), "stdout: {stdout}");
    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/plan_000.json")).unwrap())
            .unwrap();
    assert!((plan["value"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn infinite_value_prints_inf_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        &tmp.path().join("measure.json"),
        r#"{
  "dimension": 1,
  "atoms": [
    { "position": [0.0], "weight": 0.6 },
    { "position": [1.0], "weight": 0.4 }
  ]
}"#,
    );
    write(&tmp.path().join("config.json"), &solve_config(tmp.path()));
    let output = mmot()
        .arg("solve")
        .arg("--config")
        .arg(tmp.path().join("config.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("value = inf"), "stdout: {stdout}");
    let text = fs::read_to_string(tmp.path().join("out/plan_000.json")).unwrap();
    assert!(text.contains("\"inf\""), "plan file: {text}");
}

#[test]
fn malformed_config_exits_one_and_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        &tmp.path().join("config.json"),
        r#"{ "task": "solve", "outputs": { "dir": "out" } }"#,
    );
    let output = mmot()
        .arg("solve")
        .arg("--config")
        .arg(tmp.path().join("config.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(
        stderr.contains("measures") || stderr.contains("cost"),
        "stderr should name the missing field: {stderr}"
    );
}

#[test]
fn missing_measure_file_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    write(&tmp.path().join("config.json"), &solve_config(tmp.path()));
    let output = mmot()
        .arg("solve")
        .arg("--config")
        .arg(tmp.path().join("config.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("measure.json"), "stderr: {stderr}");
}

#[test]
fn budget_flag_can_force_the_budget_error() {
    let tmp = tempfile::tempdir().unwrap();
    write(&tmp.path().join("measure.json"), GOLDEN_MEASURE);
    write(&tmp.path().join("config.json"), &solve_config(tmp.path()));
    let output = mmot()
        .arg("solve")
        .arg("--config")
        .arg(tmp.path().join("config.json"))
        .arg("--budget")
        .arg("2")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("entropic"), "stderr: {stderr}");
}

fn campaign_config(dir: &Path, out: &str, seed: u64) -> String {
    format!(
        r#"{{
  "task": "campaign",
  "measures": {{ "generator": {{ "seed": {seed}, "d": 1, "n": 2, "count": 3 }} }},
  "cost": {{ "kind": "power", "exponent": 1.0, "truncation": null }},
  "solver": {{ "probe_points": 150, "probe_pairs": 40, "continuity_terms": 4 }},
  "outputs": {{ "dir": "{}" }}
}}"#,
        dir.join(out).display()
    )
}

#[test]
fn campaign_reports_are_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        &tmp.path().join("config_a.json"),
        &campaign_config(tmp.path(), "a", 99),
    );
    write(
        &tmp.path().join("config_b.json"),
        &campaign_config(tmp.path(), "b", 99),
    );
    let a = mmot()
        .arg("campaign")
        .arg("--config")
        .arg(tmp.path().join("config_a.json"))
        .env("MMOT_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0), "{a:?}");
    let b = mmot()
        .arg("campaign")
        .arg("--config")
        .arg(tmp.path().join("config_b.json"))
        .env("MMOT_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(b.status.code(), Some(0), "{b:?}");
    let report_a = fs::read(tmp.path().join("a/report.json")).unwrap();
    let report_b = fs::read(tmp.path().join("b/report.json")).unwrap();
    assert_eq!(report_a, report_b, "worker count changed the report bytes");
    assert!(tmp.path().join("a/continuity.dat").exists());
    assert!(tmp.path().join("a/bound_scatter.dat").exists());
}

#[test]
fn seed_override_changes_the_generated_instances() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        &tmp.path().join("config.json"),
        &campaign_config(tmp.path(), "x", 1),
    );
    let first = mmot()
        .arg("campaign")
        .arg("--config")
        .arg(tmp.path().join("config.json"))
        .arg("--out")
        .arg(tmp.path().join("s1"))
        .arg("--seed")
        .arg("1")
        .output()
        .unwrap();
    assert_eq!(first.status.code(), Some(0));
    let second = mmot()
        .arg("campaign")
        .arg("--config")
        .arg(tmp.path().join("config.json"))
        .arg("--out")
        .arg(tmp.path().join("s2"))
        .arg("--seed")
        .arg("2")
        .output()
        .unwrap();
    assert_eq!(second.status.code(), Some(0));
    let r1 = fs::read(tmp.path().join("s1/report.json")).unwrap();
    let r2 = fs::read(tmp.path().join("s2/report.json")).unwrap();
    assert_ne!(r1, r2, "different seeds produced identical reports");
}

#[test]
fn dual_task_writes_a_canonical_potential() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        &tmp.path().join("config.json"),
        &format!(
            r#"{{
  "task": "dual",
  "measures": {{ "generator": {{ "seed": 4, "d": 1, "n": 2 }} }},
  "cost": {{ "kind": "power", "exponent": 1.0, "truncation": 0.01 }},
  "outputs": {{ "dir": "{}" }}
}}"#,
            tmp.path().join("out").display()
        ),
    );
    let output = mmot()
        .arg("dual")
        .arg("--config")
        .arg(tmp.path().join("config.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let pot: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("out/potential_000.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(pot["canonical"], true);
    assert!(pot["u"].as_array().is_some());
    assert!(pot["objective"].as_f64().is_some());
}
