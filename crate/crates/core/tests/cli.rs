use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cm-pencil"))
        .args(args)
        .env_remove("CM_PENCIL_SEED")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn brackets_table_shows_reduced_entry() {
    let out = cli(&["brackets", "--n", "2", "--table", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("{J2,I2}_1 = 3 I1 I2 - 1/2 I1^3"), "{text}");
    assert!(text.contains("{J1,J2}_1 = J2"));
    assert!(!text.contains("_0 ="));

    let both = String::from_utf8(cli(&["brackets", "--n", "2"]).stdout).unwrap();
    assert!(both.contains("{J1,I1}_0 = 2"));
    assert_eq!(both.lines().count(), 32);
}

#[test]
fn verify_exit_codes() {
    let pass = cli(&["verify", "--suite", "involutivity", "--n", "4", "--trials", "20", "--seed", "7", "--tol", "1e-9"]);
    assert_eq!(pass.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&pass.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["trial_results"].as_array().unwrap().len(), 20);

    let fail = cli(&["verify", "--suite", "jacobi", "--n", "3", "--trials", "5", "--seed", "1", "--tol", "0"]);
    assert_eq!(fail.status.code(), Some(1));

    let unknown = cli(&["verify", "--suite", "nonsense", "--n", "3", "--seed", "1"]);
    assert_eq!(unknown.status.code(), Some(2));

    let no_seed = cli(&["verify", "--suite", "ladder", "--n", "3"]);
    assert_eq!(no_seed.status.code(), Some(2));
}

#[test]
fn ladder_example_is_exact() {
    let out = cli(&["verify", "--suite", "ladder", "--n", "3", "--trials", "50", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["max_defect"].as_f64().unwrap() < 1e-12);
}

#[test]
fn seed_from_environment() {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_cm-pencil"))
            .args(["verify", "--suite", "duality", "--n", "3", "--trials", "6"])
            .env("CM_PENCIL_SEED", "99")
            .output()
            .unwrap()
    };
    let a = run();
    assert_eq!(a.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn reports_are_byte_identical() {
    let args = ["verify", "--suite", "subalgebra", "--n", "3", "--trials", "12", "--seed", "5"];
    let a = cli(&args);
    let b = cli(&args);
    let mut seq = args.to_vec();
    seq.extend(["--execution", "sequential"]);
    let c = cli(&seq);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn simulate_writes_trajectory_and_drift() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("q.json");
    fs::write(&input, r#"{"x": [-1, 1], "y": [-1, 1]}"#).unwrap();
    let output = dir.path().join("run.csv");
    let out = cli(&[
        "simulate", "--input", path_str(&input), "--space", "Q", "--flow", "2", "--t-end", "1", "--dt", "1e-3",
        "--stride", "10", "--output", path_str(&output),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&output).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,y1,y2,I1,I2"));
    assert_eq!(lines.next(), Some("0.0,-1.0,1.0,-1.0,1.0,0.0,0.75"));
    assert_eq!(csv.lines().count(), 102);
    assert!(csv.lines().last().unwrap().starts_with("1.0,"));

    let drift: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run.drift.json")).unwrap()).unwrap();
    assert_eq!(drift["domain_exit"], false);
    for d in drift["invariant_drift"].as_array().unwrap() {
        assert!(d.as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn simulate_section_run() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("p.json");
    // off the section; the run starts from its canonical form
    fs::write(
        &input,
        r#"{"n": 2, "A": [[-1, -0.5], [0.5, 1]], "B": [[-1, 0.3], [0, 1]]}"#,
    )
    .unwrap();
    let output = dir.path().join("p.csv");
    let out = cli(&[
        "simulate", "--input", path_str(&input), "--space", "P", "--flow", "2", "--t-end", "0.5", "--dt", "1e-2",
        "--output", path_str(&output),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&output).unwrap();
    assert_eq!(csv.lines().next(), Some("t,A1_1,A1_2,A2_1,A2_2,B1_1,B1_2,B2_1,B2_2,I1,I2"));
}

#[test]
fn simulate_reports_collision_as_domain_exit() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("q.json");
    // approaching attractive pair: collides before t = 1
    fs::write(&input, r#"{"x": [-1, 1], "y": [1, -1]}"#).unwrap();
    let output = dir.path().join("run.csv");
    let out = cli(&[
        "simulate", "--input", path_str(&input), "--space", "Q", "--t-end", "2", "--dt", "1e-3", "--output",
        path_str(&output),
    ]);
    let code = out.status.code();
    let sidecar = dir.path().join("run.drift.json");
    if code == Some(1) {
        let drift: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar).unwrap()).unwrap();
        assert_eq!(drift["domain_exit"], true);
        assert!(drift["exit_time"].as_f64().unwrap() < 2.0);
    } else {
        // blow-up to non-finite values is reported as a domain error
        assert_eq!(code, Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn reduce_and_invert() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("p.json");
    fs::write(&input, r#"{"n": 2, "A": [[-1, -0.5], [0.5, 1]], "B": [[-1, 0], [0, 1]]}"#).unwrap();
    let output = dir.path().join("r.json");
    let out = cli(&["reduce", "--input", path_str(&input), "--output", path_str(&output)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(r["rank1"], true);
    assert_eq!(r["pattern"], serde_json::json!([-1]));
    assert_eq!(r["invariants"]["I"], serde_json::json!([0.0, 0.75]));
    assert_eq!(r["cm_state"]["x"], serde_json::json!([-1.0, 1.0]));

    let inv = dir.path().join("v.json");
    fs::write(&inv, r#"{"I": [0, 0.75], "J": [0, 2]}"#).unwrap();
    let qpath = dir.path().join("q.json");
    let out = cli(&["invert", "--invariants", path_str(&inv), "--output", path_str(&qpath)]);
    assert_eq!(out.status.code(), Some(0));
    let q: serde_json::Value = serde_json::from_str(&fs::read_to_string(&qpath).unwrap()).unwrap();
    let mu = q["mu"].as_array().unwrap();
    assert!((mu[1].as_f64().unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-12);

    fs::write(&inv, r#"{"I": [1, 0.1], "J": [0, 0]}"#).unwrap();
    let out = cli(&["invert", "--invariants", path_str(&inv), "--output", path_str(&qpath)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("bad.json");
    fs::write(&input, r#"{"n": 2, "A": [[1, 2]], "B": [[1, 0], [0, 1]]}"#).unwrap();
    let out = cli(&["reduce", "--input", path_str(&input), "--output", path_str(&dir.path().join("o.json"))]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&input, r#"{"x": [1, 0], "y": [0, 0]}"#).unwrap();
    let out = cli(&[
        "simulate", "--input", path_str(&input), "--space", "Q", "--t-end", "1", "--dt", "0.1", "--output",
        path_str(&dir.path().join("o.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let missing = cli(&["reduce", "--input", "/nonexistent/p.json", "--output", "/tmp/never.json"]);
    assert_eq!(missing.status.code(), Some(2));
}
