use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn finnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, body: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(body).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn ring() -> Value {
    json!({
        "network": {
            "c": [[0.0, 0.0, 0.0, 0.8], [0.8, 0.0, 0.0, 0.0], [0.0, 0.8, 0.0, 0.0], [0.0, 0.0, 0.8, 0.0]],
            "d": [[0.5, 0.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, 0.0], [0.0, 0.0, 0.0, 0.5]],
            "p": [5.0, 5.0, 5.0, 5.0],
            "beta": [2.0, 2.0, 2.0, 2.0],
            "threshold": [7.5, 7.5, 7.5, 7.5]
        },
        "initial_states": [[0.6754, -1.3678, -0.6754, 1.3678]],
        "tol": 1e-3,
        "trials": 20
    })
}

fn pair() -> Value {
    json!({
        "network": {
            "c": [[0.0, 0.5], [0.5, 0.0]],
            "d": [[0.5, 0.25], [0.25, 0.5]],
            "p": [4.0, 4.0],
            "beta": [1.0, 1.0],
            "threshold": [5.0, 5.0]
        },
        "interval_relative": 0.1,
        "initial_states": [[0.5, 0.5], [-3.0, -3.0]]
    })
}

fn report(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{command}.json"))).unwrap()).unwrap()
}

#[test]
fn equilibria_report() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "ring.json", &ring());
    let out = tmp.path().join("out");
    let res = finnet(&["equilibria", "--scenario", &sc, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let r = report(&out, "equilibria");
    assert_eq!(r["command"], "equilibria");
    assert_eq!(r["tool"], "finnet");
    assert_eq!(r["results"]["consistent_count"], 8);
    assert_eq!(r["results"]["candidates"].as_array().unwrap().len(), 16);
    assert_eq!(r["inputs"]["scenario"]["network"]["p"], json!([5.0, 5.0, 5.0, 5.0]));
}

#[test]
fn simulate_is_deterministic_and_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "ring.json", &ring());
    let mut reports = Vec::new();
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let res = finnet(&[
            "simulate",
            "--scenario",
            &sc,
            "--out",
            out.to_str().unwrap(),
            "--horizon",
            "16",
        ]);
        assert_eq!(res.status.code(), Some(0));
        let mut r = report(&out, "simulate");
        r.as_object_mut().unwrap().remove("wall_time_ms");
        reports.push(r);
        csvs.push(fs::read_to_string(out.join("trajectory_0.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(csvs[0], csvs[1]);
    let lines: Vec<&str> = csvs[0].lines().collect();
    assert_eq!(lines[0], "t,x_1,x_2,x_3,x_4");
    assert_eq!(lines.len(), 18);
    let row8: Vec<f64> = lines[9].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    let row0: Vec<f64> = lines[1].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    assert!(row8.iter().zip(&row0).all(|(a, b)| (a - b).abs() < 1e-3));
}

#[test]
fn cycles_finds_period_eight() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "ring.json", &ring());
    let res = finnet(&["cycles", "--scenario", &sc, "--horizon", "2000"]);
    assert_eq!(res.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(r["results"]["runs"][0]["period"], 8);
    assert!(r["results"]["runs"][0]["lift_residual"].as_f64().unwrap() < 1e-3);
    assert!(r["results"]["period2_check"]["witnesses"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn invariance_and_robust_on_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "pair.json", &pair());
    let out = tmp.path().join("out");
    for cmd in ["invariance", "robust"] {
        let res = finnet(&[cmd, "--scenario", &sc, "--out", out.to_str().unwrap(), "--seed", "4"]);
        assert_eq!(
            res.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
    let inv = report(&out, "invariance");
    assert_eq!(inv["results"]["report"]["orthant0_invariant"], true);
    let boxes: Vec<Value> = inv["results"]["intermediate_regions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["equity_bounding_box"].clone())
        .collect();
    assert_eq!(
        boxes,
        vec![json!([[5.0, 6.0], [4.0, 5.0]]), json!([[4.0, 5.0], [5.0, 6.0]])]
    );
    let rob = report(&out, "robust");
    let runs = rob["results"]["runs"].as_array().unwrap();
    assert_eq!(runs[0]["in_robust_set"], true);
    assert_eq!(runs[0]["sandwich"]["ordering_violation"], 0.0);
    assert_eq!(runs[1]["in_robust_set"], false);
    assert!(out.join("trajectory_0.csv").exists());
}

#[test]
fn intervene_reaches_target() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "pair.json", &pair());
    let out = tmp.path().join("out");
    let res = finnet(&[
        "intervene",
        "--scenario",
        &sc,
        "--out",
        out.to_str().unwrap(),
        "--clamped-v-update",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let r = report(&out, "intervene");
    for plan in r["results"]["plans"].as_array().unwrap() {
        assert_eq!(plan["success"], true);
    }
    assert_eq!(r["inputs"]["options"]["v_update"], "clamped");
}

#[test]
fn fixtures_report_the_injection_mismatch() {
    let res = finnet(&["fixtures"]);
    assert_eq!(res.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&res.stdout).unwrap();
    let checks = r["results"]["checks"].as_array().unwrap();
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["ten-node uniform network: injection pattern"]);
    assert!(checks.len() >= 8);
    assert!(String::from_utf8_lossy(&res.stderr).contains("mismatch"));
}

#[test]
fn malformed_scenario_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    fs::write(&path, "{\n  \"network\": [1, 2,\n").unwrap();
    let res = finnet(&["equilibria", "--scenario", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line"));

    let res = finnet(&["equilibria"]);
    assert_eq!(res.status.code(), Some(2));

    let res = finnet(&[
        "equilibria",
        "--scenario",
        tmp.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn invalid_network_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = pair();
    sc["network"]["c"] = json!([[0.0, 1.2], [0.5, 0.0]]);
    let path = write_scenario(tmp.path(), "bad.json", &sc);
    let res = finnet(&["equilibria", "--scenario", &path]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("column sum"));

    let mut sc = pair();
    sc["initial_states"] = json!([[1.0, 2.0, 3.0]]);
    let path = write_scenario(tmp.path(), "short.json", &sc);
    assert_eq!(finnet(&["simulate", "--scenario", &path]).status.code(), Some(2));
}

#[test]
fn unreachable_target_exits_3() {
    // thresholds far above asset income: no healthy equilibrium, so no target region
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = pair();
    sc["network"]["threshold"] = json!([50.0, 50.0]);
    let path = write_scenario(tmp.path(), "doomed.json", &sc);
    let res = finnet(&["intervene", "--scenario", &path]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn zero_horizon_csv_is_the_initial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "ring.json", &ring());
    let out = tmp.path().join("out");
    let res = finnet(&[
        "simulate",
        "--scenario",
        &sc,
        "--out",
        out.to_str().unwrap(),
        "--horizon",
        "0",
    ]);
    assert_eq!(res.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("trajectory_0.csv")).unwrap();
    assert_eq!(
        csv.lines().collect::<Vec<_>>(),
        vec!["t,x_1,x_2,x_3,x_4", "0,0.6754,-1.3678,-0.6754,1.3678"]
    );
}
