use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn quasilin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasilin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn no_temp_files(dir: &Path) -> bool {
    fs::read_dir(dir)
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().starts_with(".tmp"))
}

#[test]
fn verify_writes_report_with_every_section() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = quasilin(&[
        "verify",
        "--problem",
        "euclidean",
        "--domain",
        "disk:R=1",
        "--h",
        "0.02",
        "--beta",
        "1,1.5,2",
        "--out-dir",
        out,
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report = json(&dir.path().join("report.json"));
    for key in [
        "concavity",
        "minimum_principle",
        "lower_bound",
        "upper_bound",
        "boundary_identity",
        "v_equation",
        "inequality",
        "pass",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["minimum_principle"].as_array().unwrap().len(), 3);
    assert_eq!(report["pass"], Value::Bool(true));
    let derived = fs::read_to_string(dir.path().join("derived.csv")).unwrap();
    assert!(derived.starts_with("x,y,u,ux,uy,"));
    assert!(no_temp_files(dir.path()));
}

#[test]
fn dumped_config_reproduces_the_report() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let run = quasilin(&[
        "verify",
        "--domain",
        "ellipse:a=2,b=1",
        "--h",
        "0.08",
        "--beta",
        "1.25",
        "--tol-inequality",
        "2e-6",
        "--out-dir",
        first.path().to_str().unwrap(),
    ]);
    assert!(code(&run) <= 1);
    let cfg = first.path().join("run_config.txt");
    let rerun = quasilin(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        second.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&rerun), code(&run));
    let a = fs::read(first.path().join("report.json")).unwrap();
    let b = fs::read(second.path().join("report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.txt");
    fs::write(
        &cfg,
        "# radial run\nproblem = euclidean\nR = 2\nh_r = 0.001\n",
    )
    .unwrap();
    let run = quasilin(&[
        "radial",
        "--config",
        cfg.to_str().unwrap(),
        "--R",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report = json(&dir.path().join("radial_report.json"));
    assert_eq!(report["profile"]["radius"], 1.0);
    assert_eq!(report["profile"]["h_r"], 0.001);
    let profile = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(profile.starts_with("r,phi,phi_prime,phi_second\n"));
}

#[test]
fn bounds_table_flags_lorentzian_validity() {
    let dir = tempfile::tempdir().unwrap();
    let run = quasilin(&[
        "bounds",
        "--alpha",
        "0.5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);
    let table = json(&dir.path().join("bounds.json"));
    let row = &table["rows"][0];
    let e = row["euclidean"].as_f64().unwrap();
    let q = e.sqrt();
    assert!((q * q * q + q - 0.5).abs() <= 1e-12);
    assert!(row["lorentzian"].is_null());
    assert!(row["lorentzian_error"]
        .as_str()
        .unwrap()
        .contains("validity"));
    let csv = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), format!("0.5,{e},"));
}

#[test]
fn bounds_validity_map() {
    let dir = tempfile::tempdir().unwrap();
    let run = quasilin(&[
        "bounds",
        "--alpha-steps",
        "4",
        "--validity-radii",
        "0.5,1,3",
        "--existence-bracket",
        "0.5,5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let table = json(&dir.path().join("bounds.json"));
    assert_eq!(table["rows"].as_array().unwrap().len(), 4);
    let map = &table["validity_map"];
    let entries = map["entries"].as_array().unwrap();
    assert_eq!(entries[0]["exists"], true);
    assert!(entries[1]["bound"].is_null());
    assert_eq!(entries[2]["exists"], false);
    let bracket = map["existence_bracket"].as_array().unwrap();
    assert!(bracket[0].as_f64().unwrap() > 1.0 && bracket[1].as_f64().unwrap() < 3.0);
}

#[test]
fn large_lorentzian_ball_reports_existence_failure() {
    let dir = tempfile::tempdir().unwrap();
    let run = quasilin(&[
        "radial",
        "--problem",
        "lorentzian",
        "--R",
        "5",
        "--n",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 2);
    let failure = json(&dir.path().join("failure.json"));
    assert_eq!(failure["radius"], 5.0);
    assert!(!failure["attempts"].as_array().unwrap().is_empty());
    assert!(!dir.path().join("profile.csv").exists());
}

#[test]
fn failed_check_exits_one() {
    // the claimed lower bound is violated on the small Lorentzian ball
    let dir = tempfile::tempdir().unwrap();
    let run = quasilin(&[
        "radial",
        "--problem",
        "lorentzian",
        "--R",
        "0.3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 1);
    let report = json(&dir.path().join("radial_report.json"));
    assert_eq!(report["bounds"]["lower_bound"]["pass"], false);
}

#[test]
fn solve2d_writes_field_grid_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let run = quasilin(&[
        "solve2d",
        "--domain",
        "blob:R=1,eps=0.05,k=3",
        "--h",
        "0.05",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let field = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("i,j,x,y,u\n"));
    let grid = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert!(grid.starts_with("i,j,x,y,class,"));
    let log = fs::read_to_string(dir.path().join("solver_log.jsonl")).unwrap();
    let last: Value = serde_json::from_str(log.lines().last().unwrap()).unwrap();
    assert_eq!(last["lambda"], 1.0);
    assert!(last["residual_norm"].as_f64().unwrap() <= 1e-10);
    let summary = json(&dir.path().join("solve_summary.json"));
    assert_eq!(
        summary["nodes"].as_u64().unwrap() as usize,
        field.lines().count() - 1
    );
}

#[test]
fn sweep_reports_second_order_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let run = quasilin(&[
        "sweep",
        "--domain",
        "disk:R=1",
        "--ladder",
        "0.0625,0.03125",
        "--order-study",
        "false",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(code(&run) <= 1, "{}", String::from_utf8_lossy(&run.stderr));
    let sweep = json(&dir.path().join("sweep.json"));
    let rows = sweep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let ratio = rows[1]["error_ratio"].as_f64().unwrap();
    assert!((3.2..=4.8).contains(&ratio), "{ratio}");
    assert_eq!(sweep["rungs"].as_array().unwrap().len(), 2);
}

#[test]
fn config_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["verify", "--h", "0.05", "--out-dir", out],
        vec![
            "verify",
            "--domain",
            "disk:R=1",
            "--h",
            "abc",
            "--out-dir",
            out,
        ],
        vec![
            "verify",
            "--domain",
            "square:a=1",
            "--h",
            "0.05",
            "--out-dir",
            out,
        ],
        vec![
            "verify",
            "--domain",
            "disk:R=1",
            "--h",
            "0.5",
            "--out-dir",
            out,
        ],
        vec!["radial", "--R", "1", "--tol-shoot", "0", "--out-dir", out],
        vec![
            "radial",
            "--R",
            "1",
            "--problem",
            "custom",
            "--out-dir",
            out,
        ],
        vec![
            "verify",
            "--domain",
            "disk:R=1",
            "--h",
            "0.05",
            "--beta",
            "3",
            "--out-dir",
            out,
        ],
        vec!["verify", "--no-such-flag"],
        vec!["frobnicate"],
    ] {
        let run = quasilin(&args);
        assert_eq!(
            code(&run),
            3,
            "{args:?}: {}",
            String::from_utf8_lossy(&run.stderr)
        );
    }
    let missing = dir.path().join("absent.txt");
    let run = quasilin(&["bounds", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&run), 3);
}
