use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "eb_n0_db,ka,n,n_c,inner_len,detector,trials,arrivals,misses,pupe,ci_lo,ci_hi,seed";

fn sim(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_ura-sim")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "ura-sim {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// A small configuration file: five packets of horizon at load 1.
fn small_config(dir: &Path) -> String {
    let text = String::from_utf8(sim(&["profile", "desk"]).stdout).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["t"] = 10_000.into();
    cfg["k_a"] = 1.0.into();
    cfg["n_out"] = 2.into();
    let path = dir.join("cfg.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn profile_prints_valid_json() {
    for name in ["desk", "full"] {
        let out = sim(&["profile", name]);
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(v["n"].as_u64().unwrap() >= 2000);
    }
}

#[test]
fn sweep_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("s.csv");
    sim(&[
        "sweep",
        "--config",
        &cfg,
        "--ebn0",
        "6:10:4",
        "--trials",
        "2",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("6.0,1.0,2000,256,2,energy,2,"));
    assert!(lines[2].ends_with(",3"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(meta["sweeps"][0]["config"]["t"], 10_000);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut texts = Vec::new();
    for extra in [&["--threads", "1"][..], &["--threads", "3"], &["--sequential"]] {
        let out = dir.path().join(format!("r{}.csv", texts.len()));
        let mut args = vec!["run", "--config", &cfg, "--trials", "3", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        sim(&args);
        texts.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn detector_override_and_ablation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("a.csv");
    sim(&[
        "--detector",
        "preamble",
        "ablate-window",
        "--config",
        &cfg,
        "--lens",
        "2,3",
        "--ebn0",
        "12",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][4], rows[0][5]), ("2", "preamble"));
    assert_eq!((rows[1][4], rows[1][5]), ("3", "preamble"));
}

#[test]
fn minebn0_reports_vacuous_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = sim(&[
        "minebn0", "--config", &cfg, "--eps", "1.0", "--ebn0", "3:9:3", "--trials", "1",
    ]);
    assert!(String::from_utf8_lossy(&out.stdout).contains(": 3 dB"));
}

#[test]
fn trace_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let trace = dir.path().join("t.json");
    let dump = dir.path().join("y.bin");
    sim(&[
        "trace",
        "--config",
        &cfg,
        "--out",
        trace.to_str().unwrap(),
        "--dump",
        dump.to_str().unwrap(),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert!(!doc["events"].as_array().unwrap().is_empty());
    // Observation of length T + n.
    assert_eq!(std::fs::metadata(&dump).unwrap().len(), 12_000 * 8);
}

#[test]
fn bad_inputs_fail() {
    let run = |args: &[&str]| Command::new(env!("CARGO_BIN_EXE_ura-sim")).args(args).output().unwrap();
    assert!(!run(&["run", "--trials", "1", "--out", "/dev/null"]).status.success());
    assert!(
        !run(&["sweep", "--profile", "desk", "--ebn0", "a:b", "--out", "/dev/null"])
            .status
            .success()
    );
    assert!(!run(&[
        "sweep",
        "--profile",
        "desk",
        "--ebn0",
        "4",
        "--trials",
        "0",
        "--out",
        "/dev/null"
    ])
    .status
    .success());
}
