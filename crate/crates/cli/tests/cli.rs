use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use vcle::ConsoleHandle;

fn vcle() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vcle"))
}

fn run(args: &[&str]) -> Output {
    vcle().args(args).output().expect("vcle runs")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name)
}

/// CSV text with the wall-clock column blanked.
fn without_wall(csv: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(csv)
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[4] = "";
            f.join(",")
        })
        .collect()
}

#[test]
fn play_is_reproducible() {
    let args = ["--seed", "7", "play", "--fast", "--episodes", "10"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let rows = without_wall(&a.stdout);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0], "episode,reward,moves,outcome,,level,start,moving_avg");
    assert_eq!(rows, without_wall(&b.stdout));
}

#[test]
fn play_script_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let level = dir.path().join("dead_end.txt");
    std::fs::write(&level, "id: 9\nstart: 0,1,N\n#\n#\n").unwrap();
    let script = dir.path().join("moves.txt");
    std::fs::write(&script, "Forward, Forward\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "play", "--fast", "--episodes", "2",
        "--level", level.to_str().unwrap(),
        "--script", script.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read(out.join("episodes.csv")).unwrap();
    let rows = without_wall(&text);
    assert_eq!(rows.len(), 3);
    assert!(rows[1..].iter().all(|r| r.contains(",lost_fall,")));

    std::fs::write(&script, "Forward, Backward\n").unwrap();
    let o = run(&["play", "--fast", "--level", level.to_str().unwrap(), "--script", script.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn unknown_variant_fails() {
    let o = run(&["play", "--variant", "kula-v9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown environment"));
}

#[test]
fn protocol_verify_exit_codes() {
    let o = run(&["protocol-verify", golden("forward.vctr").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));

    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.vctr");
    let o = run(&["protocol-record", golden("forward.session").to_str().unwrap(), "--out", t.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&t).unwrap(), std::fs::read(golden("forward.vctr")).unwrap());

    // flip the last byte of channel D, which is the file's final byte
    let mut bytes = std::fs::read(&t).unwrap();
    let n = bytes.len();
    bytes[n - 1] ^= 0x01;
    std::fs::write(&t, &bytes).unwrap();
    let o = run(&["protocol-verify", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL: channel D diverges at offset 88"));
}

#[test]
fn solve_prints_moves() {
    let o = run(&["solve", "--level", "1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "LookRight,Forward,LookLeft,Forward,Forward,Forward");
}

#[test]
fn dump_frame_and_audio() {
    let dir = tempfile::tempdir().unwrap();
    let ppm = dir.path().join("f.ppm");
    assert!(run(&["dump", "frame", "--out", ppm.to_str().unwrap()]).status.success());
    assert!(std::fs::read(&ppm).unwrap().starts_with(b"P6 320 240 255\n"));
    let wav = dir.path().join("a.wav");
    let o = run(&["dump", "audio", "--moves", "LookRight,Forward", "--out", wav.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read(&wav).unwrap().starts_with(b"RIFF"));
}

#[test]
fn train_q_writes_log_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--seed", "1", "train-q", "--fast", "--episodes", "20", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(without_wall(&std::fs::read(dir.path().join("episodes.csv")).unwrap()).len(), 21);
    let table: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("qtable.json")).unwrap()).unwrap();
    assert!(!table.as_array().unwrap().is_empty());

    let o = run(&["train-q", "--variant", "audio-v1", "--episodes", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn env_serve_round_trip() {
    let mut child = vcle()
        .args(["env-serve", "--fast", "--variant", "Kula-random-v1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let mut ask = |req: &str| -> serde_json::Value {
        writeln!(stdin, "{req}").unwrap();
        serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap()
    };
    let spaces = ask(r#"{"cmd":"spaces"}"#);
    assert_eq!(spaces["variant"], "random-v1");
    let a = ask(r#"{"cmd":"reset","seed":3}"#);
    let b = ask(r#"{"cmd":"reset","seed":3}"#);
    assert_eq!(a["state"]["hash"], b["state"]["hash"]);
    let s = ask(r#"{"cmd":"step","action":1}"#);
    assert_eq!(s["ok"], true);
    assert!(s["info"]["clock"].as_f64().unwrap() < 80.0);
    let k = ask(r#"{"cmd":"save"}"#);
    let r = ask(&format!(r#"{{"cmd":"resume","key":{}}}"#, k["key"]));
    assert_eq!(r["state"]["hash"], s["state"]["hash"]);
    assert_eq!(ask(r#"{"cmd":"resume","key":999}"#)["error"], "UnknownState");
    assert_eq!(ask(r#"{"cmd":"close"}"#)["ok"], true);
    assert!(child.wait().unwrap().success());
}

#[test]
fn fifo_console_serves_a_client() {
    let dir = tempfile::tempdir().unwrap();
    let session = dir.path().join("session");
    let mut child = vcle()
        .args(["serve", session.to_str().unwrap(), "--fast"])
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let t0 = Instant::now();
    while !session.join("a").exists() {
        assert!(t0.elapsed() < Duration::from_secs(10), "fifos never appeared");
        std::thread::sleep(Duration::from_millis(20));
    }
    let c = ConsoleHandle::connect(&session).unwrap();
    c.freeze().unwrap();
    c.load_game("kula?level=1&start=0").unwrap();
    let header = c.read_bytes(0x10000, 17).unwrap();
    assert_eq!(header[14], 1, "level id");
    assert_eq!(c.get_screen().unwrap().width(), 320);
    c.kill().unwrap();
    assert!(child.wait().unwrap().success());
}

#[test]
fn example_config_is_accepted() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/example.toml");
    let o = run(&["play", "--fast", "--episodes", "1", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[reward]\nstep_cots = 0.1\n").unwrap();
    let o = run(&["play", "--fast", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
