use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use credal_cli::scenario::load_scenario;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_credal"))
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(kind: &str, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(kind)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

const SANDWICH: &str = r#"
kind = "sandwich"
rules = [
  { type = "anchor_contraction", gamma = 0.2, anchor = 0.5 },
  { type = "anchor_contraction", gamma = 0.5, anchor = 0.5 },
]
schedule = [0, 1]
start = [0.0, 1.0]
max_iter = 100
tol = 1e-15
"#;

#[test]
fn bundled_scenarios_are_valid() {
    let mut count = 0;
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 7);
}

#[test]
fn passing_run_exits_zero_and_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", SANDWICH);
    let out = dir.path().join("out");
    let o = run("sandwich", &s, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "trace.csv", "metadata.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["kind"], "sandwich");
    assert_eq!(report["scenario_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("psi", &scenarios_dir().join("psi_shift.toml"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("out/report.json").is_file());
}

#[test]
fn non_monotone_sandwich_rule_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = SANDWICH.replace(
        r#"{ type = "anchor_contraction", gamma = 0.5, anchor = 0.5 }"#,
        r#"{ type = "shift", delta = 0.1 }"#,
    );
    let s = write(dir.path(), "s.toml", &text);
    let o = run("sandwich", &s, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("monotone"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_input_exits_two_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", "kind = \"counterexample\"\ndelta = 0.6\nstart = [0.2, 0.3]\n");
    let o = run("counterexample", &s, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn kind_mismatch_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", SANDWICH);
    let o = run("iterate", &s, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sandwich"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenarios_dir().join("uniqueness_cbdl.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("uniqueness", &s, &a, &[]).status.code(), Some(0));
    assert_eq!(run("uniqueness", &s, &b, &[]).status.code(), Some(0));
    for f in ["report.json", "trace.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_changes_the_run_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenarios_dir().join("uniqueness_cbdl.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run("uniqueness", &s, &a, &[]);
    run("uniqueness", &s, &b, &["--seed", "123"]);
    assert_ne!(std::fs::read(a.join("trace.csv")).unwrap(), std::fs::read(b.join("trace.csv")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(b.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 123);
    assert_eq!(report["overrides"]["seed"], 123);
}

#[test]
fn inapplicable_flags_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("gaussian", &scenarios_dir().join("gaussian_illustration.toml"), &dir.path().join("out"), &["--tol", "1e-3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--tol"));
}

#[test]
fn unwritable_output_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", SANDWICH);
    let out = dir.path().join("out");
    std::fs::create_dir(&out).unwrap();
    // A directory squatting on the trace file name makes that write fail.
    std::fs::create_dir(out.join("trace.csv")).unwrap();
    let o = run("sandwich", &s, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("report.json").exists());
    assert!(!out.join("metadata.json").exists());
}

#[test]
fn validate_and_schema_subcommands() {
    let o = bin().arg("validate").arg("--scenario").arg(scenarios_dir().join("iterate_cbdl.toml")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("iterate"));

    let o = bin().arg("schema").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let schema: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(schema["$defs"]["rule"]["required"][0], "type");
}
