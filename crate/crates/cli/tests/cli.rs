use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bandits(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bandits"))
        .args(args)
        .env_remove("BANDITS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

const SMALL: &str = r#"{
  "instance": {"arms": [
    {"kind": "beta", "alpha": 4.0, "beta": 1.0},
    {"kind": "beta", "alpha": 1.0, "beta": 1.4},
    {"kind": "bernoulli", "p": 0.2}
  ]},
  "players": {"n": 3, "policy": {"kind": "smaa"}},
  "run": {"horizon": 10, "seeds": [5, 6], "record_every": 1}
}"#;

#[test]
fn equilibrium_reference_instance() {
    let v = json(&bandits(&["equilibrium", "--means", "1,0.4,0.2", "--players", "3"]));
    assert_eq!(v["m_star"], serde_json::json!([2, 1, 0]));
    assert_eq!(v["support"], serde_json::json!([1, 2]));
    assert_eq!(v["z_star"], 0.4);
    assert!((v["poa"].as_f64().unwrap() - 8.0 / 7.0).abs() < 1e-12);
    assert!((v["delta0"].as_f64().unwrap() - 1.0 / 30.0).abs() < 1e-12);
    assert!(v["symmetric_mne"].is_null());
}

#[test]
fn equilibrium_with_mixed() {
    let v = json(&bandits(&["equilibrium", "--means", "1,0.6,0.48", "--players", "3", "--mne"]));
    let p: Vec<f64> = serde_json::from_value(v["symmetric_mne"]["p"].clone()).unwrap();
    for (a, b) in p.iter().zip([0.705, 0.254, 0.041]) {
        assert!((a - b).abs() < 1e-3, "{p:?}");
    }
    assert_eq!(v["w_pne"], 1.6);
    let explicit = json(&bandits(&["equilibrium", "--means", "1,0.6,0.48", "--players", "3", "--mne", "--mne-support", "1,2,3"]));
    assert_eq!(explicit["symmetric_mne"], v["symmetric_mne"]);
}

#[test]
fn equilibrium_single_arm() {
    let v = json(&bandits(&["equilibrium", "--means", "0.7", "--players", "4"]));
    assert_eq!(v["m_star"], serde_json::json!([4]));
}

#[test]
fn exit_codes() {
    let dup = bandits(&["equilibrium", "--means", "0.5,0.25", "--players", "2"]);
    assert_eq!(dup.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&dup.stderr).contains("0.25"));

    let bad = bandits(&["equilibrium", "--means", "0.5,1.5", "--players", "2"]);
    assert_eq!(bad.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace(r#""horizon": 10"#, r#""horizon": -1"#));
    let out = bandits(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config.json:8:"));

    let missing = bandits(&["simulate", "--config", "/nonexistent/bandits.json"]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn simulate_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = bandits(&["simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = fs::read_to_string(out_dir.join("runs/seed_5.csv")).unwrap();
    let mut lines = run.lines();
    assert_eq!(lines.next().unwrap(), "seed,t,agent,arm,share,cum_reward,cum_regret,cum_regret_prime,cum_noneq");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 30);
    for agent in 1..=3 {
        let n = rows.iter().filter(|r| r.split(',').nth(2) == Some(&agent.to_string())).count();
        assert_eq!(n, 10);
    }
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "seed,checkpoint_t,agent,cum_reward,cum_regret,cum_regret_prime,cum_noneq");
    // checkpoints 1, 2, 4, 8, 10 for two seeds and three agents
    assert_eq!(summary.lines().count(), 1 + 2 * 5 * 3);
    let digest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(digest["checkpoints"].as_array().unwrap().len(), 5);
}

#[test]
fn output_dir_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_bandits"))
        .args(["simulate", "--config", &cfg])
        .env("BANDITS_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env_dir.join("summary.csv").exists());

    let cfg_dir = dir.path().join("from_config");
    let with_output = SMALL.replacen('{', &format!("{{\n  \"output\": {{\"dir\": {:?}}},", cfg_dir.display().to_string()), 1);
    let cfg = write_config(dir.path(), &with_output);
    let out = Command::new(env!("CARGO_BIN_EXE_bandits"))
        .args(["simulate", "--config", &cfg])
        .env("BANDITS_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(cfg_dir.join("summary.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace(r#""horizon": 10"#, r#""horizon": 300"#));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(bandits(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap(), "--jobs", "1"]).status.success());
    assert!(bandits(&["simulate", "--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "3"]).status.success());
    for f in ["runs/seed_5.csv", "runs/seed_6.csv", "summary.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn stability_no_op_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL
        .replace(r#""horizon": 10"#, r#""horizon": 200"#)
        .replacen('{', "{\n  \"deviation\": {\"player\": 2, \"policy\": {\"kind\": \"smaa\"}},", 1);
    let cfg = write_config(dir.path(), &body);
    let v = json(&bandits(&["stability", "--config", &cfg]));
    assert_eq!(v["deviator"], 2);
    for l in v["loss"].as_array().unwrap() {
        assert_eq!(l["mean"], 0.0);
    }
    assert!(v["constants"]["beta"].as_f64().unwrap() > 0.0);

    let missing = write_config(dir.path(), SMALL);
    assert_eq!(bandits(&["stability", "--config", &missing]).status.code(), Some(2));
}
