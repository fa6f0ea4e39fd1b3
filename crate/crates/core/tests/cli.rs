use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acbug::harness::RECORDS_HEADER;
use acbug::scm::Scm;
use tempfile::TempDir;

fn acbug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acbug")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn smoke_config(dir: &Path) -> PathBuf {
    let path = dir.join("cfg.json");
    fs::write(
        &path,
        r#"{
  "gen": { "num_vars": 4, "num_parents": 2, "support_lo": 2, "support_hi": 3, "seed": 0 },
  "sweep": { "param": "num_parents", "values": [1, 2] },
  "algorithms": ["modl", "p1", "oracle", "se"],
  "epsilon": 1.0,
  "delta": 0.1,
  "num_scms": 2,
  "runs_per_scm": 2,
  "master_seed": 7
}"#,
    )
    .unwrap();
    path
}

fn run_into(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    acbug(&args)
}

#[test]
fn run_writes_records_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = smoke_config(dir.path());
    let out = dir.path().join("out");
    let res = run_into(&cfg, &out, &["--dump-phases"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(lines.next(), Some(RECORDS_HEADER));
    assert_eq!(lines.count(), 2 * 2 * 2 * 4);
    assert!(out.join("summary.csv").exists());
    assert_eq!(fs::read_to_string(out.join("choices.jsonl")).unwrap().lines().count(), 32);
    let phases = fs::read_to_string(out.join("phases.jsonl")).unwrap();
    let algs: Vec<String> = phases
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["algorithm"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(algs.iter().filter(|a| *a == "modl").count(), 8, "one dump per MODL run");
    assert!(!algs.iter().any(|a| a == "se"), "SE has no phases");
}

#[test]
fn reruns_are_byte_identical_across_job_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = smoke_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run_into(&cfg, &a, &["--jobs", "1"])), 0);
    assert_eq!(code(&run_into(&cfg, &b, &["--jobs", "3"])), 0);
    for f in ["records.csv", "summary.csv", "choices.jsonl"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn seed_flag_overrides_master_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = smoke_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run_into(&cfg, &a, &[])), 0);
    assert_eq!(code(&run_into(&cfg, &b, &["--seed", "8"])), 0);
    assert_ne!(fs::read(a.join("records.csv")).unwrap(), fs::read(b.join("records.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run_into(&missing, &out, &[])), 2);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&run_into(&bad, &out, &[])), 2);

    let cfg = smoke_config(dir.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("\"num_scms\": 2", "\"num_scms\": 0");
    fs::write(&cfg, text).unwrap();
    assert_eq!(code(&run_into(&cfg, &out, &[])), 2);

    let cfg = smoke_config(dir.path());
    assert_eq!(code(&run_into(&cfg, &out, &["--jobs", "0"])), 2);
    assert_eq!(code(&acbug(&["run"])), 2);
    assert_eq!(code(&acbug(&["frobnicate"])), 2);
    assert_eq!(code(&acbug(&["--help"])), 0);
}

#[test]
fn runtime_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let cfg = smoke_config(dir.path());
    // the output directory cannot be created under a regular file
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(code(&run_into(&cfg, &blocker.join("out"), &[])), 1);
}

#[test]
fn gen_then_bound() {
    let dir = TempDir::new().unwrap();
    let cfg = smoke_config(dir.path());
    let scm_path = dir.path().join("scm.json");
    let res = acbug(&["gen", "--config", cfg.to_str().unwrap(), "--out", scm_path.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(&scm_path).unwrap();
    let scm = Scm::from_json(&text).unwrap();
    assert_eq!(scm.num_vars(), 4);
    assert_eq!(scm.to_json().unwrap(), text);

    let again = dir.path().join("scm2.json");
    acbug(&["gen", "--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(fs::read(&again).unwrap(), text.as_bytes());

    let res = acbug(&["bound", "--scm", scm_path.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let stdout = String::from_utf8_lossy(&res.stdout).into_owned();
    let h: Vec<f64> = stdout.lines().map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(h.len(), 3);
    assert!(h[0] >= h[1] && h[1] > 0.0, "{stdout}");

    let res = acbug(&["bound", "--scm", scm_path.to_str().unwrap(), "--delta", "1.5"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn validate_passes() {
    let res = acbug(&["validate", "--seed", "3"]);
    let stdout = String::from_utf8_lossy(&res.stdout).into_owned();
    assert_eq!(code(&res), 0, "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["k10_sweep.json", "k30_sweep.json", "smoke.json"] {
        let text = fs::read_to_string(root.join(name)).unwrap();
        let cfg = acbug::harness::ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(cfg.delta, 0.1, "{name}");
        if name.ends_with("_sweep.json") {
            assert_eq!((cfg.gen.support_lo, cfg.gen.support_hi, cfg.epsilon), (3, 6, 0.5));
        }
    }
}
