use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_inspection-game");

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fig1.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_exact_on_fig1_fixture() {
    let fig = fixture();
    let doc = json_stdout(&run(&["solve", "--method", "cg-exact", "--epsilon", "0", "--instance", path(&fig)]));
    assert!((doc["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((doc["certificates"]["attacker_best_response"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(doc["certificates"]["alpha"], 1.0);
    assert!(doc["diagnostics"]["wall_ms"].is_null());
    let total: f64 = doc["sigma_D"].as_array().unwrap().iter().map(|a| a["prob"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn solve_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let fig = fixture();
    for method in ["cg-exact", "cg-rg", "mwu-fg"] {
        let a = dir.path().join(format!("{method}-a.json"));
        let b = dir.path().join(format!("{method}-b.json"));
        for out in [&a, &b] {
            let status = run(&["solve", "--method", method, "--epsilon", "0.2", "--instance", path(&fig), "--out", path(out)]);
            assert!(status.status.success());
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

#[test]
fn mwu_forward_greedy_certificate() {
    // alpha = 1 / (1 - 0.5)^2 = 4 and the game value is 1.
    let fig = fixture();
    let doc = json_stdout(&run(&["solve", "--method", "mwu-fg", "--epsilon", "0.25", "--instance", path(&fig)]));
    assert_eq!(doc["certificates"]["alpha"], 4.0);
    assert!(doc["certificates"]["attacker_best_response"].as_f64().unwrap() <= 4.0 * 1.0 + 0.25);
}

#[test]
fn trace_has_one_line_per_iteration() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.txt");
    let fig = fixture();
    let doc = json_stdout(&run(&[
        "solve", "--method", "mwu-exact", "--max-iter", "25", "--instance", path(&fig), "--trace", path(&trace),
    ]));
    assert_eq!(doc["diagnostics"]["iterations"], 25);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 25);
    assert!(text.lines().all(|l| l.split(' ').count() == 3));
}

#[test]
fn project_linear_example() {
    let dir = TempDir::new().unwrap();
    let v = dir.path().join("v.json");
    std::fs::write(&v, "[2, 1, 1]").unwrap();
    for algo in ["linear", "sorted"] {
        let doc = json_stdout(&run(&["project", "--rho-tilde", path(&v), "--r-a", "1", "--algo", algo]));
        let got: Vec<f64> = serde_json::from_value(doc).unwrap();
        for (a, b) in got.iter().zip([0.5, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn best_response_and_certify() {
    let dir = TempDir::new().unwrap();
    let fig = fixture();
    let rho = dir.path().join("rho.json");
    std::fs::write(&rho, "[0, 0, 0, 0, 0, 1, 1]").unwrap();
    let doc = json_stdout(&run(&["best-response", "--instance", path(&fig), "--rho", path(&rho), "--algo", "exact"]));
    assert!((doc["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let result = dir.path().join("result.json");
    assert!(run(&["solve", "--method", "cg-exact", "--epsilon", "0", "--instance", path(&fig), "--out", path(&result)])
        .status
        .success());
    let cert = json_stdout(&run(&["certify", "--instance", path(&fig), "--strategy", path(&result)]));
    assert!((cert["attacker_best_response"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(cert["defender_best_response"]["exact"], true);

    let bound = json_stdout(&run(&[
        "certify", "--instance", path(&fig), "--strategy", path(&result), "--exact-br-cap", "1",
    ]));
    assert_eq!(bound["defender_best_response"]["exact"], false);
    assert!(bound["defender_best_response"]["value"].as_f64().unwrap() <= 1.0 + 1e-9);
}

#[test]
fn generate_is_deterministic_and_solvable() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let args = ["generate", "--n", "20", "--m", "60", "--seed", "5", "--r-d", "2", "--out", path(out)];
        assert!(run(&args).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let doc = json_stdout(&run(&["solve", "--method", "cg-fg", "--instance", path(&a)]));
    assert!(doc["value"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sweep_writes_csv() {
    let fig = fixture();
    let out = run(&["sweep", "--method", "cg-exact", "--epsilon", "0", "--instance", path(&fig), "--r-d", "1,2,3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,r_D,value_estimate,worst_case_attacker,wall_ms");
    assert_eq!(lines.len(), 4);
    let values: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{values:?}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let fig = fixture();
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--method", "cg-exact", "--bogus"]).status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(&fig).unwrap().replace("\"v1\": 0.5", "\"v1\": 0");
    std::fs::write(&bad, text).unwrap();
    let out = run(&["solve", "--method", "cg-exact", "--instance", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("detection probability must be in (0,1]"));

    let out = run(&["solve", "--method", "cg-exact", "--instance", path(&fig), "--exact-br-cap", "2"]);
    assert_eq!(out.status.code(), Some(3));

    // Starting columns already contain the optimum for the fig1 fixture, so use an
    // instance that needs several columns.
    let hard = dir.path().join("hard.json");
    assert!(run(&["generate", "--n", "12", "--m", "30", "--seed", "1", "--r-d", "3", "--out", path(&hard)])
        .status
        .success());
    let out = run(&["solve", "--method", "cg-exact", "--epsilon", "0", "--max-iter", "1", "--instance", path(&hard)]);
    assert_eq!(out.status.code(), Some(2));
    let incumbent: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(incumbent["value"].is_number());
}
