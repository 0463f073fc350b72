// SPDX-License-Identifier: Apache-2.0
//! Black-box tests of the `seqgnn` binary.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn seqgnn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqgnn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = seqgnn(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn gen_data_twice_gives_identical_trees() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "gen-data",
            "--count",
            "20",
            "--seed",
            "3",
            "--min-nodes",
            "10",
            "--max-nodes",
            "30",
            "--cycles",
            "200",
            "--out",
            out,
        ]
    };
    ok(&args("a"), tmp.path());
    ok(&args("b"), tmp.path());
    let (a, b) = (tree(&tmp.path().join("a")), tree(&tmp.path().join("b")));
    assert!(a.len() > 20);
    assert_eq!(a, b);
}

#[test]
fn simulate_defaults_to_ten_thousand_cycles() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("c.bench"),
        "INPUT(a)\nq = DFF(n)\nn = NOT(q)\nOUTPUT(n)\n",
    )
    .unwrap();
    let stdout = ok(&["simulate", "c.bench", "--saif"], tmp.path());
    assert!(stdout.contains("10000"));
    let m = json(&tmp.path().join("out/run_manifest.json"));
    assert_eq!(m["command"]["simulate"]["workload"]["cycles"], 10000);
    // toggle flip-flop: q and n flip every cycle
    let labels = std::fs::read_to_string(tmp.path().join("out/labels.csv")).unwrap();
    assert!(labels.lines().count() == 4);
    assert!(tmp.path().join("out/top.saif").exists());
}

#[test]
fn power_on_hand_circuit_matches_hand_computation() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    std::fs::write(p.join("c.bench"), "INPUT(a)\nb = NOT(a)\nc = AND(a, b)\nOUTPUT(c)\n").unwrap();
    // a: 0 1 1 0 1 → rises 2, falls 1 over 4 edges
    std::fs::write(p.join("tb.txt"), "PIS a\n0\n1\n1\n0\n1\n").unwrap();
    std::fs::write(
        p.join("pm.json"),
        r#"{"vdd": 2.0, "clock_freq_hz": 1e6, "cap_fF": {"PI": 1.0, "NOT": 2.0, "AND": 3.0, "DFF": 0.0}}"#,
    )
    .unwrap();
    ok(&["simulate", "c.bench", "--testbench", "tb.txt", "--out", "sim"], p);
    ok(
        &[
            "power",
            "c.bench",
            "--testbench",
            "tb.txt",
            "--labels",
            "sim/labels.csv",
            "--power-config",
            "pm.json",
            "--out",
            "pw",
        ],
        p,
    );
    let r = json(&p.join("pw/power.json"));
    // a and b toggle on 3 of 4 edges; c stays 0
    let hand = 0.5 * 4.0 * 1e6 * (1e-15 * 0.75 + 2e-15 * 0.75 + 3e-15 * 0.0);
    let gt = r["ground_truth_w"].as_f64().unwrap();
    assert!((gt - hand).abs() <= 1e-12 * hand, "{gt} vs {hand}");
    assert_eq!(r["predicted_w"].as_f64().unwrap(), gt);
    assert_eq!(r["rel_error"].as_f64().unwrap(), 0.0);
}

#[test]
fn exit_codes_classify_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert_eq!(seqgnn(&["no-such-command"], p).status.code(), Some(1));
    assert_eq!(seqgnn(&["simulate"], p).status.code(), Some(1));
    assert_eq!(seqgnn(&["--help"], p).status.code(), Some(0));
    assert_eq!(seqgnn(&["simulate", "missing.bench"], p).status.code(), Some(2));
    std::fs::write(p.join("bad.bench"), "INPUT(a)\nb = MUX(a, a)\n").unwrap();
    let out = seqgnn(&["simulate", "bad.bench"], p);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    std::fs::write(p.join("pm.json"), r#"{"vdd": -1, "clock_freq_hz": 1, "cap_fF": {}}"#).unwrap();
    std::fs::write(p.join("c.bench"), "INPUT(a)\nOUTPUT(a)\n").unwrap();
    let out = seqgnn(&["power", "c.bench", "--power-config", "pm.json", "--cycles", "10"], p);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(p.join("noout.bench"), "INPUT(a)\nb = NOT(a)\n").unwrap();
    let out = seqgnn(&["reliability", "noout.bench", "--cycles", "10"], p);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradcheck_passes_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&["gradcheck", "--nodes", "10"], tmp.path());
    assert!(stdout.contains("ok"), "{stdout}");
    let r = json(&tmp.path().join("out/gradcheck.json"));
    assert_eq!(r["model"]["passed"], true);
    assert_eq!(r["components"].as_array().unwrap().len(), 7);
    // an impossible tolerance is a numerical failure
    assert_eq!(
        seqgnn(&["gradcheck", "--nodes", "10", "--tol", "0"], tmp.path())
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn replay_reproduces_outputs_and_rejects_changed_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    std::fs::write(p.join("c.bench"), "INPUT(a)\nINPUT(b)\nc = NAND(a, b)\nOUTPUT(c)\n").unwrap();
    ok(
        &[
            "simulate", "c.bench", "--cycles", "500", "--errors", "--seed", "9", "--out", "one",
        ],
        p,
    );
    ok(&["replay", "one/run_manifest.json", "--out", "two"], p);
    assert_eq!(tree(&p.join("one")), tree(&p.join("two")));
    std::fs::write(p.join("c.bench"), "INPUT(a)\nINPUT(b)\nc = NOR(a, b)\nOUTPUT(c)\n").unwrap();
    assert_eq!(
        seqgnn(&["replay", "one/run_manifest.json", "--out", "three"], p)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn outputs_stay_under_out_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    std::fs::write(p.join("c.bench"), "INPUT(a)\nb = NOT(a)\nOUTPUT(b)\n").unwrap();
    let before = std::fs::read(p.join("c.bench")).unwrap();
    ok(&["simulate", "c.bench", "--cycles", "100", "--out", "o"], p);
    ok(&["power", "c.bench", "--cycles", "100", "--out", "o2"], p);
    let mut top: Vec<String> = std::fs::read_dir(p)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["c.bench", "o", "o2"]);
    assert_eq!(std::fs::read(p.join("c.bench")).unwrap(), before);
}
