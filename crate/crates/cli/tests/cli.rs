use std::path::PathBuf;
use std::process::{Command, Output};

fn pureheap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pureheap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../golden/two_pass_k4.trace")
}

#[test]
fn enumerate_three_nodes() {
    let o = pureheap(&["enumerate", "--n", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "40");
}

#[test]
fn enumerate_above_cap_is_a_usage_error() {
    let o = pureheap(&["enumerate", "--n", "11"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(pureheap(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(pureheap(&["adversary", "--n", "x"]).status.code(), Some(2));
}

#[test]
fn verify_lemmas_example_run() {
    let o = pureheap(&["verify-lemmas", "--n", "64", "--trials", "200", "--seed", "7"]);
    let out = stdout(&o);
    assert!(out.contains("monotone-rank"), "{out}");
    assert_eq!(o.status.code(), Some(0), "{out}");
}

#[test]
fn verify_lemmas_json_lists_every_suite() {
    let o = pureheap(&["verify-lemmas", "--n", "16", "--trials", "10", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for want in ["monotone-rank", "effcount", "sk-bound", "maxdistinct", "eq1", "eq2", "subdistinct"] {
        assert!(names.contains(&want), "{names:?}");
    }
    let all_ok = v["checks"].as_array().unwrap().iter().all(|c| c["violations"] == 0);
    assert_eq!(o.status.code(), Some(if all_ok { 0 } else { 1 }));
}

#[test]
fn golden_trace_replays_to_recorded_snapshot() {
    let text = std::fs::read_to_string(golden()).unwrap();
    let recorded = text
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("SNAPSHOT"))
        .unwrap()
        .trim()
        .to_string();
    let o = pureheap(&["trace", "replay", golden().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), recorded);
}

#[test]
fn golden_trace_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k4.trace");
    let o = pureheap(&["trace", "dump", "--adversary-rounds", "4", "--n", "16", "-o", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(golden()).unwrap());
}

#[test]
fn tampered_trace_fails_verification() {
    let text = std::fs::read_to_string(golden()).unwrap();
    let tampered = text.replacen("HASPARENT 1 -> false", "HASPARENT 1 -> true", 1);
    assert_ne!(tampered, text);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.trace");
    std::fs::write(&path, tampered).unwrap();
    assert_eq!(pureheap(&["trace", "replay", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn workload_dump_and_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.trace");
    let p = path.to_str().unwrap();
    let o = pureheap(&["trace", "dump", "--algorithm", "multipass", "--workload", "dijkstra", "--n", "50", "--seed", "3", "-o", p]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let snap = text.lines().last().unwrap().strip_prefix("SNAPSHOT").unwrap().trim();
    let o = pureheap(&["trace", "replay", p]);
    assert_eq!(stdout(&o).trim(), snap);
}

#[test]
fn adversary_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = pureheap(&["adversary", "--n", "48", "--k", "4", "--audit", "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["rounds"].as_array().unwrap().len(), 4);
    assert_eq!(v["verdicts"]["rank_audit_mismatches"], 0);
    assert!(v["trail"].as_array().unwrap().len() >= 4 * 4);
}

#[test]
fn config_file_drives_the_adversary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 10\nk = 3\nmode = \"exact\"\nalgorithm = \"multipass\"\nq = 3\n").unwrap();
    let o = pureheap(&["adversary", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["algorithm"], "multipass");
    assert_eq!(v["config"]["mode"], "exact");
    assert_eq!(v["verdicts"]["count_trail_exact"], true);
}

#[test]
fn threshold_below_w_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "threshold = 2\n").unwrap();
    let o = pureheap(&["adversary", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("below w"));
}

#[test]
fn cross_check_passes_on_small_exact_runs() {
    let o = pureheap(&["adversary", "--n", "8", "--k", "3", "--mode", "exact", "--q", "3", "--cross-check"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["count_trail_exact"], true);
    assert_eq!(v["schedules_agree"], true);
}

#[test]
fn bench_reports_both_algorithms() {
    let o = pureheap(&["bench", "--n", "128", "--workload", "dijkstra"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let algs: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["algorithm"].as_str().unwrap()).collect();
    assert_eq!(algs, ["two-pass", "multipass"]);
    assert!(v[0]["mean_extract_min"].as_f64().unwrap() > 0.0);
}
