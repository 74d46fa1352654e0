//! End-to-end runs of the `hybrid-qber` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-qber"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_key(path: &Path, bits: &str) {
    std::fs::write(path, format!("{bits}\n")).unwrap();
}

fn pattern(n: usize, f: impl Fn(usize) -> bool) -> String {
    (0..n).map(|i| if f(i) { '1' } else { '0' }).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn wrap_then_estimate_identical_keys() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("alice.txt");
    let msg = dir.path().join("msg.bin");
    write_key(&key, &pattern(400, |i| (i * 7) % 3 == 0));

    let out = run(&["wrap", "--key", s(&key), "--m", "3", "--flip", "0.13", "--seed", "9", "--out", s(&msg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&msg).unwrap().len(), 23 + 1600 / 8);

    let v = json(&run(&["estimate", "--msg", s(&msg), "--bob-key", s(&key)]));
    for field in ["ber_noisy", "qber_flip_raw", "qber_flip", "qber_raw", "qber_est"] {
        assert!(v[field].is_number(), "missing {field}");
    }
    // Bob holds Alice's key: the noisy-key estimate sees only the 13% flips.
    assert!((v["qber_flip_raw"].as_f64().unwrap() - 0.13).abs() < 0.1);
    assert!(v["qber_est"].as_f64().unwrap() < 0.15);

    let half = json(&run(&["estimate", "--msg", s(&msg), "--bob-key", s(&key), "--mode-override", "half"]));
    assert!(half["qber_raw"].is_number());
}

#[test]
fn wrap_is_deterministic_in_seed() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("k.txt");
    write_key(&key, &pattern(64, |i| i % 2 == 0));
    let paths: Vec<_> = (0..3).map(|i| dir.path().join(format!("m{i}.bin"))).collect();
    for (p, seed) in paths.iter().zip(["1", "1", "2"]) {
        let out = run(&["wrap", "--key", s(&key), "--m", "2", "--flip", "0.3", "--seed", seed, "--out", s(p)]);
        assert!(out.status.success());
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&paths[0]), read(&paths[1]));
    assert_ne!(read(&paths[0]), read(&paths[2]));
}

#[test]
fn strict_security_violation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("k.txt");
    write_key(&key, &pattern(50, |i| i % 5 == 0));
    let msg = dir.path().join("m.bin");
    let out = run(&["wrap", "--key", s(&key), "--m", "3", "--flip", "0.10", "--out", s(&msg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!msg.exists());

    let relaxed = run(&["wrap", "--key", s(&key), "--m", "3", "--flip", "0.10", "--no-strict", "--out", s(&msg)]);
    assert!(relaxed.status.success());
}

#[test]
fn corrupt_message_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("k.txt");
    write_key(&key, "1010");
    let msg = dir.path().join("m.bin");
    std::fs::write(&msg, b"XXXX\x01").unwrap();
    let out = run(&["estimate", "--msg", s(&msg), "--bob-key", s(&key)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_input_exits_2() {
    let out = run(&["estimate", "--msg", "/nonexistent/m.bin", "--bob-key", "/nonexistent/k.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn traditional_reports_sample_and_remainder() {
    let dir = tempfile::tempdir().unwrap();
    let alice = dir.path().join("a.txt");
    let bob = dir.path().join("b.txt");
    write_key(&alice, &pattern(100, |_| false));
    write_key(&bob, &pattern(100, |i| i % 10 == 0));
    let v = json(&run(&["traditional", "--alice", s(&alice), "--bob", s(&bob), "--fraction", "0.2", "--seed", "3"]));
    assert_eq!(v["sample_size"], 20);
    assert_eq!(v["remaining_len"], 80);
    let q = v["qber_est"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&q));
}

#[test]
fn attack_against_embedded_key() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("k.txt");
    let msg = dir.path().join("m.bin");
    let truth = dir.path().join("t.txt");
    write_key(&key, &pattern(2000, |i| (i * i) % 7 < 3));
    let out = run(&[
        "wrap", "--key", s(&key), "--m", "2", "--flip", "0.3", "--seed", "5",
        "--out", s(&msg), "--embedded-out", s(&truth),
    ]);
    assert!(out.status.success());
    let v = json(&run(&["attack", "--msg", s(&msg), "--truth", s(&truth), "--seed", "1"]));
    assert_eq!(v["n"], 2000);
    assert_eq!(v["m"], 2);
    assert_eq!(v["p_leaked_theoretical"].as_f64().unwrap(), 0.25);
    let hit = v["majority_hit_rate"].as_f64().unwrap();
    assert!((hit - 0.75).abs() < 0.05, "{hit}");
}

#[test]
fn attempts_prints_exact_power_of_two() {
    let out = run(&["attempts", "--n", "100", "--p-leaked", "0.125"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1267650600228229401496703205376");

    let bad = run(&["attempts", "--n", "10", "--p-leaked", "1.5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn run_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"key_lengths":[100],"qbers":[0.05],"samples":10,"seed":1,
            "methods":[{"kind":"TRADITIONAL","fraction":0.1},
                       {"kind":"hybrid","m":3,"p_flip":0.13}]}"#,
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let js = dir.path().join("out.json");
    let out = run(&["run", "--config", s(&cfg), "--out", s(&csv), "--json", s(&js), "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("Traditional-10%,100,0.05,10,"));
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(&js).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[1]["method"], "Hybrid-13%-Noise-Level-3");
}

#[test]
fn run_rejects_bad_config_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let csv = dir.path().join("out.csv");
    std::fs::write(&cfg, r#"{"key_lengths":[100],"qbers":[0.05],"samples":10,"seed":1,"methods":[{"kind":"hybrid","m":3,"p_flip":0.1}]}"#).unwrap();
    assert_eq!(run(&["run", "--config", s(&cfg), "--out", s(&csv)]).status.code(), Some(1));
    std::fs::write(&cfg, "{not json").unwrap();
    assert_eq!(run(&["run", "--config", s(&cfg), "--out", s(&csv)]).status.code(), Some(1));
    assert!(!csv.exists());
}
