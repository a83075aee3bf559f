//! End-to-end checks of the command-line surface.

use std::process::Command;

fn ofwl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ofwl"))
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("ofwl-cli-{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn throughput_subcommand_prints_rate() {
    let out = ofwl()
        .args(["throughput", "--inputs", "256", "--outputs", "256", "--delta-x", "1e-4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1.966e17"), "{text}");
}

#[test]
fn run_subcommand_with_config_and_overrides() {
    let dir = tmp_dir("run");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = serde_json::json!({
        "network": "sigma-and",
        "np": 64,
        "max_steps": 12,
        "seed": 5
    });
    let cfg_path = dir.join("cfg.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();

    let out = ofwl()
        .args([
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--np",
            "128",
            "--out",
            dir.join("report").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("np=128"), "override ignored: {text}");
    let summary = std::fs::read_to_string(dir.join("report/summary.csv")).unwrap();
    assert!(summary.starts_with("network,np,nc,post_mse,seed,eta,threshold,window,task"));
    assert!(summary.lines().nth(1).unwrap().starts_with("sigma-and,128"));
    assert!(dir.join("report/series-000.csv").exists());
}

#[test]
fn validate_rejects_bad_netlist_with_nonzero_exit() {
    let dir = tmp_dir("validate");
    std::fs::create_dir_all(&dir).unwrap();
    // A netlist with a zero-delay self loop.
    let bad = serde_json::json!({
        "neurons": [{"id": 0, "kind": "sum-linear", "layer": 0}],
        "synapses": [{"from": {"neuron": 0}, "to": 0, "weight": 1.0, "delay": 0}],
        "external_inputs": 0,
        "outputs": [0],
        "encoding": "generic-intensity"
    });
    let path = dir.join("bad.json");
    std::fs::write(&path, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = ofwl().args(["validate", path.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("zero-delay cycle"), "{text}");

    // And the good fixture passes.
    let fixture = format!("{}/fixtures/sigma-and.json", env!("CARGO_MANIFEST_DIR"));
    let out = ofwl().args(["validate", &fixture]).output().unwrap();
    assert!(out.status.success());
}

#[test]
fn build_then_validate_round_trip() {
    let dir = tmp_dir("build");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("boolean.json");
    let out = ofwl()
        .args(["build", "--network", "boolean", "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = ofwl().args(["validate", path.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("33 neurons, 56 synapses"), "{text}");
}
