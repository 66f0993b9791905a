use std::path::Path;
use std::process::{Command, Output};

fn catchment(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catchment"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

const SMALL: &[&str] = &[
    "--rows",
    "8",
    "--cols",
    "8",
    "--n-existing",
    "2",
    "--population-scale",
    "300",
];

fn synth(dir: &Path, out: &str, seed: &str, n_candidate: &str) {
    let mut args = vec!["synth", "--out", out, "--seed", seed, "--n-candidate", n_candidate];
    args.extend_from_slice(SMALL);
    let o = catchment(dir, &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn synth_writes_identical_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = catchment(tmp.path(), &["synth", "--seed", "7", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = files(&tmp.path().join("a"));
    let names: Vec<_> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["demand.csv", "edges.csv", "nodes.csv", "sites.csv"]);
    assert_eq!(a, files(&tmp.path().join("b")));
}

#[test]
fn synth_rejects_tiny_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let o = catchment(tmp.path(), &["synth", "--rows", "1", "--cols", "1", "--out", "x"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("2x2"));
}

#[test]
fn synth_into_a_file_fails() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("taken"), "").unwrap();
    let o = catchment(tmp.path(), &["synth", "--out", "taken"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn score_writes_baseline_reports() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sc", "3", "12");
    let o = catchment(
        tmp.path(),
        &["score", "--bundle", "sc", "--out", "out", "--dump-matrix"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = tmp.path().join("out");
    for f in [
        "accessibility_general.csv",
        "accessibility_elderly.csv",
        "coverage_general.json",
        "coverage_elderly.json",
        "layout.geojson",
        "travel_times_general.csv",
        "travel_times_elderly.csv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let cov: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("coverage_general.json")).unwrap()).unwrap();
    let total: f64 = cov
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["share"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);

    let plain = catchment(tmp.path(), &["score", "--bundle", "sc", "--out", "plain"]);
    assert_eq!(code(&plain), 0);
    assert!(!tmp.path().join("plain/travel_times_general.csv").exists());
}

#[test]
fn missing_demand_file() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sc", "3", "12");
    std::fs::remove_file(tmp.path().join("sc/demand.csv")).unwrap();
    let o = catchment(tmp.path(), &["score", "--bundle", "sc", "--out", "out"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("file not found"), "{}", stderr(&o));
    assert!(stderr(&o).contains("demand.csv"));
}

#[test]
fn bad_arguments_are_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&catchment(tmp.path(), &["score", "--no-such-flag"])), 2);
    assert_eq!(code(&catchment(tmp.path(), &["fly"])), 2);
    assert_eq!(code(&catchment(tmp.path(), &["score", "--alpha", "x"])), 2);
    assert_eq!(code(&catchment(tmp.path(), &["score", "--out", "o"])), 2);
    std::fs::write(tmp.path().join("bad.cfg"), "colour = red\n").unwrap();
    assert_eq!(code(&catchment(tmp.path(), &["score", "--config", "bad.cfg"])), 2);
}

#[test]
fn solve_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sc", "5", "12");
    for out in ["one", "two"] {
        let o = catchment(tmp.path(), &["solve", "--bundle", "sc", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("k = "));
    }
    let one = files(&tmp.path().join("one"));
    assert!(one.iter().any(|(n, _)| n == "result.json"));
    assert!(one.iter().any(|(n, _)| n == "baseline_coverage_general.json"));
    assert_eq!(one, files(&tmp.path().join("two")));
}

#[test]
fn infeasible_without_candidates() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sc", "5", "0");
    let o = catchment(tmp.path(), &["solve", "--bundle", "sc", "--out", "out"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("below target"));
    let result: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("out/result.json")).unwrap()).unwrap();
    assert_eq!(result["feasible"], false);
    assert!(!result["shortfalls"].as_array().unwrap().is_empty());
}

#[test]
fn oracle_against_heuristic() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sc", "5", "10");
    assert_eq!(
        code(&catchment(tmp.path(), &["solve", "--bundle", "sc", "--out", "out"])),
        0
    );
    let o = catchment(tmp.path(), &["oracle", "--bundle", "sc", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let ratio: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("heuristic / oracle objective ratio = "))
        .expect("ratio line")
        .parse()
        .unwrap();
    assert!(ratio >= 1.0 - 1e-12);
    let oracle: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("out/oracle_result.json")).unwrap()).unwrap();
    assert_eq!(oracle["method"], "oracle");
}

#[test]
fn oracle_pool_too_large() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sc", "5", "20");
    let o = catchment(
        tmp.path(),
        &["oracle", "--bundle", "sc", "--out", "out", "--max-pool", "15"],
    );
    assert_eq!(code(&o), 4);
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sc", "5", "6");
    std::fs::write(
        tmp.path().join("run.cfg"),
        "bundle = sc\nout = from-config\na_sigma = 0.2 # strict\n",
    )
    .unwrap();
    let o = catchment(tmp.path(), &["solve", "--config", "run.cfg"]);
    assert!(tmp.path().join("from-config/result.json").exists(), "{}", stderr(&o));
    let o = catchment(
        tmp.path(),
        &["solve", "--config", "run.cfg", "--out", "flag", "--a-sigma", "0"],
    );
    assert_eq!(code(&o), 0);
    let result: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("flag/result.json")).unwrap()).unwrap();
    assert_eq!(result["k"], 0);
}
