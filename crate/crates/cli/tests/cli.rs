use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_loopgroup-theta"));
    c.env_remove("LOOPGROUP_THETA_CACHE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn num(v: &Value) -> f64 {
    v.as_str().unwrap().parse().unwrap()
}

fn lattice_file(dir: &tempfile::TempDir, body: &str) -> String {
    let path = dir.path().join("lattice.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn lattice_identity_satisfies_riemann_roch() {
    let dir = tempfile::tempdir().unwrap();
    let f = lattice_file(&dir, r#"{"gram": [["1"]]}"#);
    let out = run(&["lattice", &f, "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json_of(&out);
    assert!(num(&j["rr_residual"]).abs() < 1e-12);
    assert!(num(&j["deg"]).abs() < 1e-15);
    assert!((num(&j["lambda1"]) - 1.0).abs() < 1e-15);
}

#[test]
fn twisted_line_has_degree_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = lattice_file(&dir, r#"{"gram": [["1"]], "twist": "1"}"#);
    let j = json_of(&run(&["lattice", &f, "--json"]));
    assert!((num(&j["deg"]) - 1.0).abs() < 1e-14);
}

#[test]
fn malformed_gram_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    for body in [r#"{"gram": [["1", "2"]]}"#, r#"{"gram": [["one"]]}"#, "not json", r#"{"gram": [["-1"]]}"#] {
        let f = lattice_file(&dir, body);
        let out = run(&["lattice", &f]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn weights_follow_partition_numbers() {
    let j = json_of(&run(&["weights", "--level-bound", "10", "--json"]));
    let expected = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42];
    for (n, want) in expected.iter().enumerate() {
        let level = &j["levels"][n];
        let w = level["weights"].as_array().unwrap().iter().find(|w| w["m"] == serde_json::json!([n, n])).unwrap();
        assert_eq!(w["mult"], *want, "level {n}");
    }
}

#[test]
fn weights_at_level_zero_bound() {
    let j = json_of(&run(&["weights", "--level-bound", "0", "--json"]));
    let levels = j["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 1);
    assert_eq!(levels[0]["weights"].as_array().unwrap().len(), 1);
}

#[test]
fn level_zero_weight_is_rejected() {
    let out = run(&["weights", "--lambda", "0,0"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["weights", "--lambda", "1,x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn roots_affine_and_rep() {
    let j = json_of(&run(&["roots", "--cartan", "B2", "--json"]));
    assert_eq!(j["positive_roots"].as_array().unwrap().len(), 4);
    let j = json_of(&run(&["affine", "--cartan", "A2", "--level-bound", "1", "--json"]));
    assert_eq!(j["affine"]["affine_cartan"].as_array().unwrap().len(), 3);
    let j = json_of(&run(&["rep", "--level-bound", "3", "--json"]));
    assert_eq!(j["level_dims"], serde_json::json!([1, 3, 4, 7]));
    assert_eq!(run(&["roots", "--cartan", "Q7"]).status.code(), Some(2));
}

#[test]
fn bundle_reports_the_tower() {
    let out = run(&["bundle", "--level-bound", "3", "--element", "h(a1,2);chi(-a1,1);eta(1/2)", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json_of(&out);
    let ranks: Vec<u64> = j["levels"].as_array().unwrap().iter().map(|l| l["tower_rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, [1, 4, 8, 15]);
    assert!((num(&j["constants"]["A1"]) - 2.0 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn level_lowering_element_is_not_admissible() {
    let out = run(&["bundle", "--level-bound", "2", "--element", "chi(a2,1)"]);
    assert_eq!(out.status.code(), Some(5));
    let out = run(&["bundle", "--element", "chi(-a1,"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn theta_finite_converges_for_loop_rotation() {
    let out = run(&["theta-finite", "--level-bound", "12", "--element", "eta(1/2)", "--epsilon", "0.1", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let j = json_of(&out);
    assert_eq!(j["all_converged"], true);
    let rep = &j["reports"][0];
    assert_eq!(rep["verdict"], "CONVERGED");
    // Terms strictly decrease from level 2 on.
    let levels = rep["levels"].as_array().unwrap();
    let vals: Vec<f64> = levels
        .iter()
        .map(|l| if l["h0_exact"].is_null() { &l["h0_upper"] } else { &l["h0_exact"] })
        .map(|v| v.as_str().unwrap().parse::<f64>().unwrap_or(0.0))
        .collect();
    for n in 2..vals.len() - 1 {
        assert!(vals[n + 1] < vals[n] || vals[n + 1] == 0.0, "{vals:?}");
    }
}

#[test]
fn theta_finite_sweeps_t() {
    let out = run(&["theta-finite", "--level-bound", "12", "--epsilon", "0.1", "--t", "1/4,1/2,1,2,4", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json_of(&out);
    assert_eq!(j["reports"].as_array().unwrap().len(), 5);
}

#[test]
fn tau_outside_unit_interval_exits_four() {
    assert_eq!(run(&["theta-finite", "--element", "eta(2)"]).status.code(), Some(4));
}

#[test]
fn exit_code_follows_the_verdict() {
    let out = run(&["theta-finite", "--level-bound", "3", "--exact-levels", "3", "--element", "eta(99/100)", "--json"]);
    let j = json_of(&out);
    let verdict = j["reports"][0]["verdict"].as_str().unwrap().to_string();
    if verdict == "CONVERGED" {
        assert_eq!(out.status.code(), Some(0));
    } else {
        assert_eq!(out.status.code(), Some(1));
        assert!(verdict == "INCONCLUSIVE" || verdict == "DIVERGENT-SUSPECTED");
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["theta-finite", "--level-bound", "8", "--element", "h(a1,2);chi(-a1,1);eta(1/2)", "--json"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
}

#[test]
fn out_and_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.txt");
    let csv_path = dir.path().join("levels.csv");
    let out = run(&[
        "theta-finite",
        "--level-bound",
        "12",
        "--out",
        out_path.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&out_path).unwrap().contains("verdict CONVERGED"));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("epsilon,t,n,rank"));
    assert_eq!(csv.lines().count(), 14);
}

#[test]
fn cache_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["rep", "--level-bound", "2", "--json"];
    let first = bin().args(args).env("LOOPGROUP_THETA_CACHE", &cache).output().unwrap();
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let second = bin().args(args).env("LOOPGROUP_THETA_CACHE", &cache).output().unwrap();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(second.status.code(), Some(0));
}
