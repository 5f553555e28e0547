use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sitesim"));
    c.current_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("../.."));
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_accepts_shipped_and_names_broken_file() {
    let ok = run(&["validate"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).starts_with("ok:"));

    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config");
    for sub in std::fs::read_dir(&src).unwrap() {
        let sub = sub.unwrap().path();
        let to = dir.path().join(sub.file_name().unwrap());
        std::fs::create_dir_all(&to).unwrap();
        for f in std::fs::read_dir(&sub).unwrap() {
            let f = f.unwrap().path();
            std::fs::copy(&f, to.join(f.file_name().unwrap())).unwrap();
        }
    }
    let bad = dir.path().join("vehicles/crane.yaml");
    std::fs::write(&bad, "name: Crane\nevents:\n  normals:\n    - id: one\n").unwrap();
    let o = run(&["validate", "--config-dir", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&format!("{}:", bad.display())), "{err}");
    assert!(err.lines().count() == 1, "{err}");
}

#[test]
fn geom_check_prints_residuals() {
    let o = run(&["geom", "check", "--trials", "500"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("max position residual"));
    assert!(out.contains("snap idempotence failures 0"));
}

#[test]
fn score_reads_one_respondent_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sus.csv");
    std::fs::write(&csv, "5,1,5,1,5,1,5,1,5,1\n4,1,5,1,5,1,5,1,5,1\n").unwrap();
    let o = run(&["score", "--instrument", "sus", "--in", csv.to_str().unwrap()]);
    assert!(o.status.success());
    // Oracle: (4-1) + 4*4 + 5*4 = 39 of 40, times 2.5.
    assert_eq!(stdout(&o), "{\"sus\":100.0}\n{\"sus\":97.5}\n");

    let csv = dir.path().join("ssq.csv");
    std::fs::write(&csv, "0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n").unwrap();
    let o = run(&["score", "--instrument", "ssq", "--in", csv.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["total"], 0.0);

    std::fs::write(&csv, "1,2,3\n").unwrap();
    let o = run(&["score", "--instrument", "cohesion", "--in", csv.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn timeline_lists_main_events() {
    let o = run(&["timeline", "--session", "main"]);
    assert!(o.status.success());
    let events = stdout(&o).lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(events, 10);
}

struct Server(std::process::Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_bots_replay_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let actions = dir.path().join("actions.jsonl");
    let wire = dir.path().join("wire.jsonl");
    let mut child = bin()
        .args([
            "serve",
            "--session",
            "training",
            "--port",
            "0",
            "--tick-rate",
            "100",
            "--log",
        ])
        .arg(&wire)
        .arg("--action-log")
        .arg(&actions)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut first)
        .unwrap();
    let srv = Server(child);
    let addr = first
        .trim()
        .trim_start_matches("listening on ws://")
        .trim_end_matches('/')
        .to_string();

    let out: PathBuf = dir.path().join("t.jsonl");
    let o = run(&[
        "bots",
        "run",
        "--addr",
        &addr,
        "--task",
        "training",
        "--seed",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("complete=true"));

    let o = run(&["bots", "replay", "--in", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    drop(srv);

    let o = run(&["summarize", "--in", actions.to_str().unwrap()]);
    assert!(o.status.success());
    let s: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(s["duration_ticks"].as_u64().unwrap() > 0);
    assert!(s["errors_by_kind"].get("RoleViolationError").is_none());
    assert!(std::fs::metadata(&wire).unwrap().len() > 0);
}
