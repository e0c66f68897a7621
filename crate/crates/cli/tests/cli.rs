use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fwdeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwdeq"))
        .args(args)
        .output()
        .unwrap()
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn shipped(name: &str) -> String {
    scenarios().join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
  "market": {"mu": 20, "m": 1, "pi0": 5, "pi_t": 3, "eps": 0.7, "rate": 0.01,
             "gamma_p": 0.75, "gamma_s": 0.2},
  "model": {"kind": "brownian", "sigma1": 0.2, "sigma2": 2, "rho": 0.4,
            "mpr": 0.3, "horizon": 1}
"#;

#[test]
fn solve_prints_all_fields_as_json() {
    let out = fwdeq(&["solve", &shipped("base_point.json"), "--format", "json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let alpha = v["alpha"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&alpha));
    assert!(v["F"].as_f64().unwrap() < v["E_PT"].as_f64().unwrap());
    assert!(v["alpha_nf"].is_number());
}

#[test]
fn sweep_csv_is_complete_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_string_lossy().into_owned();
    let file = shipped("correlation_gamma_p.json");
    let run = || {
        let out = fwdeq(&["sweep", &file, "--out", &out_dir, "--svg"]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        fs::read(dir.path().join("correlation_gamma_p.csv")).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis1,axis2,alpha,h,F,P0,E_PT,premium,yield,price_change,alpha_nf,error"
    );
    assert_eq!(lines.count(), 19 * 3);
    assert!(!text.contains('\r'));
    let svg = fs::read_to_string(dir.path().join("correlation_gamma_p.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<path").count(), 4 * 3);
}

#[test]
fn empty_sweep_gives_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "point.json", &format!("{SMALL}}}"));
    let out_dir = dir.path().join("out");
    let out = fwdeq(&["sweep", &file, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(out_dir.join("point.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[0], row[1], row[11]), ("", "", ""));
}

#[test]
fn no_forward_column_is_filled_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = fwdeq(&[
        "sweep",
        &shipped("storage_forward_vs_none.json"),
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("storage_forward_vs_none.json")).unwrap();
    let rows: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 38);
    for r in &rows {
        let (a, nf) = (
            r["alpha"].as_f64().unwrap(),
            r["alpha_nf"].as_f64().unwrap(),
        );
        assert!(a >= nf - 1e-9, "storage {a} below {nf} without forward");
    }
}

#[test]
fn failing_points_stay_in_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(r#"{SMALL}, "sweep": [{{"parameter": "rho", "values": [0.0, 1.0]}}]}}"#);
    let file = write(dir.path(), "edge.json", &text);
    let out = fwdeq(&["sweep", &file, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("edge.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with(','));
    assert!(!rows[1].ends_with(','));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("\"rate\"", "\"interest\"");
    let file = write(dir.path(), "bad.json", &format!("{text}}}"));
    let out = fwdeq(&["solve", &file]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("market") && err.contains("interest"), "{err}");
}

#[test]
fn oracle_check_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "small.json", &format!("{SMALL}}}"));
    let out = fwdeq(&[
        "oracle-check",
        &file,
        "--samples",
        "200000",
        "--seed",
        "7",
        "--format",
        "json",
    ]);
    let checks: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(checks.len(), 6);
    for c in &checks {
        assert_eq!(c["status"], "pass", "{c}");
    }
    assert!(out.status.success());
}
