use std::process::Command;

fn sphmult(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sphmult")).args(args).output().expect("binary runs")
}

#[test]
fn kernel_piece_evaluates_as_json() {
    let out = sphmult(&["--json", "kernels", "eval", "--piece", "kappa_omega", "--space", "H2", "--p", "1.3333", "--t", "3", "--eps", "0.05"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["piece"], "kappa_omega");
    let re = v["value"][0].as_f64().unwrap();
    let im = v["value"][1].as_f64().unwrap();
    assert!(re.is_finite() && im.is_finite() && re.hypot(im) > 0.0);
}

#[test]
fn unknown_suite_exits_with_usage_error() {
    let out = sphmult(&["run", "everything"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
}

#[test]
fn suite_writes_json_and_csv() {
    let dir = std::env::temp_dir().join(format!("sphmult-cli-{}", std::process::id()));
    let out = sphmult(&["--out-dir", dir.to_str().unwrap(), "harness", "suite", "independence"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("independence.json")).unwrap()).unwrap();
    assert_eq!(json["verdict"], "pass");
    let csv = std::fs::read_to_string(dir.join("independence.csv")).unwrap();
    assert!(csv.starts_with("name,verdict,value,detail"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_errors_report_the_key_path() {
    let path = std::env::temp_dir().join(format!("sphmult-bad-{}.json", std::process::id()));
    std::fs::write(&path, r#"{"p": 1.5, "multiplier": {"params": [1]}}"#).unwrap();
    let out = sphmult(&["harness", "estimate", "--config", path.to_str().unwrap()]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`multiplier`") && err.contains("kind"), "{err}");
}

#[test]
fn estimate_runs_from_a_config_file() {
    let path = std::env::temp_dir().join(format!("sphmult-cfg-{}.json", std::process::id()));
    std::fs::write(&path, r#"{"p": 1.5, "multiplier": {"kind": "gaussian", "params": [0.1]}, "resolutions": [32, 48], "trials": 2, "iterations": 5}"#).unwrap();
    let out = sphmult(&["--json", "--threads", "2", "harness", "estimate", "--config", path.to_str().unwrap()]);
    std::fs::remove_file(&path).unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["resolution_curve"].as_array().unwrap().len(), 2);
    assert!(v["empirical_norm_lower_bound"].as_f64().unwrap() <= 1.0);
}
