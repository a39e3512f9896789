//! End-to-end runs of the binary.

mod common;

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-qbc"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn synth(dir: &Path, seed: &str) -> String {
    let p = dir.join("art.libsvm");
    let (code, err) = run(&[
        "synth", "--out", p.to_str().unwrap(), "--seed", seed, "--pool-per-class", "40", "--test-per-class", "100",
        "--init-per-class", "10",
    ]);
    assert_eq!(code, 0, "{err}");
    p.to_str().unwrap().to_string()
}

fn manifest(dir: &Path, data: &str) -> String {
    let text = format!(
        "dataset = art\ndata = {data}\ntest_data = {}\nn_repetitions = 3\nn_iterations = 6\ncommittee_size = 3\n\
         init_per_class = 10\nseed = 5\n",
        data.replace("art.libsvm", "art.test.libsvm")
    );
    let p = dir.join("run.conf");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn synth_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let pa = synth(a.path(), "3");
    let pb = synth(b.path(), "3");
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    let ta = a.path().join("art.test.libsvm");
    assert_eq!(std::fs::read(&ta).unwrap(), std::fs::read(b.path().join("art.test.libsvm")).unwrap());
    assert_eq!(std::fs::read_to_string(&pa).unwrap().lines().count(), 2 * 50);
    assert_eq!(std::fs::read_to_string(&ta).unwrap().lines().count(), 2 * 100);
}

#[test]
fn run_and_report_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "1");
    let conf = manifest(dir.path(), &data);
    let out = dir.path().join("out");
    let (code, err) = run(&["run", "--config", &conf, "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(code, 0, "{err}");
    let traj = std::fs::read_to_string(out.join("trajectories.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2 + 3 * 4 * 6);
    let (code, err) = run(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4 * 6);
    assert!(out.join("plot_data.csv").exists());
}

#[test]
fn trajectories_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "2");
    let conf = manifest(dir.path(), &data);
    let mut outputs = Vec::new();
    for threads in ["1", "3", "1"] {
        let out = dir.path().join(format!("out{}", outputs.len()));
        let (code, err) = run(&["run", "--config", &conf, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert_eq!(code, 0, "{err}");
        outputs.push(std::fs::read(out.join("trajectories.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["run", "--out", o]).0, 1, "no data path");
    let bad = common::fixtures().join("malformed/bad_label.libsvm");
    let (code, err) = run(&["run", "--data", bad.to_str().unwrap(), "--out", o]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");
    assert!(out.join("PARTIAL").exists());
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "data = x.libsvm\ncomitee_size = 3\n").unwrap();
    let (code, err) = run(&["run", "--config", conf.to_str().unwrap(), "--out", o]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");
    std::fs::write(&conf, "data = x.libsvm\ncommittee_size = 1\n").unwrap();
    assert_eq!(run(&["run", "--config", conf.to_str().unwrap(), "--out", o]).0, 1);
    assert_eq!(run(&["run", "--data", "missing.libsvm", "--out", o]).0, 2);
    assert_eq!(run(&["report", "--out", dir.path().join("nowhere").to_str().unwrap()]).0, 2);
    let data = synth(dir.path(), "0");
    assert_eq!(run(&["run", "--data", &data, "--out", o, "--threads", "0"]).0, 1);
}
