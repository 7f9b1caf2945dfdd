mod common;

use std::process::Command;

fn triggernet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_triggernet"))
}

#[test]
fn run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = triggernet()
        .args(["run", "--dump"])
        .arg(common::article())
        .arg("--corpus-dir")
        .arg(common::corpus_dir())
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert_eq!(stdout, common::read(&out, "summary.txt"));

    let report = triggernet()
        .arg("report")
        .arg(out.join("summary.json"))
        .output()
        .unwrap();
    assert!(report.status.success());
    assert_eq!(String::from_utf8(report.stdout).unwrap(), stdout);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "dump = {}\ncorpus_dir = {}\nwindow = 1\nout = {}\n",
            common::article().display(),
            common::corpus_dir().display(),
            dir.path().join("out").display()
        ),
    )
    .unwrap();
    let run = |extra: &[&str]| {
        let o = triggernet()
            .arg("run")
            .arg("--config")
            .arg(&cfg)
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        common::read(&dir.path().join("out"), "summary.json")
    };
    assert!(run(&[]).contains("\"window\": 1"));
    assert!(run(&["--window", "3"]).contains("\"window\": 3"));
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| triggernet().args(args).output().unwrap().status.code();
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["run", "--dump", "x.xml"]), Some(1)); // no provider directory
    assert_eq!(
        code(&[
            "run",
            "--dump",
            "x.xml",
            "--corpus-dir",
            "c",
            "--window",
            "0"
        ]),
        Some(1)
    );
    let dir = common::corpus_dir();
    let dir = dir.to_str().unwrap();
    assert_eq!(
        code(&[
            "run",
            "--dump",
            "/nonexistent.xml",
            "--corpus-dir",
            dir,
            "--out",
            "/tmp/triggernet-cli-missing"
        ]),
        Some(2)
    );
    assert_eq!(
        code(&[
            "run",
            "--dump",
            "/nonexistent.xml",
            "--corpus-dir",
            "/nonexistent-corpus"
        ]),
        Some(1)
    );
}

#[test]
fn factoids_prints_sorted_links() {
    let o = triggernet()
        .args(["factoids", "--dump"])
        .arg(common::article())
        .args(["--revision", "1004"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let lines: Vec<String> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect();
    assert_eq!(
        lines,
        [
            "Chess",
            "Christianity",
            "Cricket",
            "Hinduism",
            "India",
            "Islam",
            "Kabaddi",
            "Sachin Tendulkar",
            "Sikhism"
        ]
    );
}
