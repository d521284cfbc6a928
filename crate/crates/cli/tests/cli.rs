use std::fs;
use std::process::{Command, Output};

fn anytrust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anytrust")).args(args).output().expect("spawn anytrust")
}

#[test]
fn dkg_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("dkg.jsonl");
    let out = anytrust(&[
        "dkg",
        "--n",
        "8",
        "--t",
        "3",
        "--seed",
        "5",
        "--adversary",
        "malform-ciphertext",
        "--s-expected",
        "4",
        "--report",
        report.to_str().unwrap(),
        "--trace",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("dkg n=8 t=3 seed=5 adversary=malform-ciphertext"));
    assert!(stdout.contains("consistent"));

    let text = fs::read_to_string(&report).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["scenario"], "dkg");
        assert_eq!(v["seed"], 5);
    }
    let trace = fs::read_to_string(dir.path().join("dkg.jsonl.trace")).unwrap();
    assert!(trace.lines().count() > 8);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = anytrust(&["broadcast", "--n", "9", "--seed", "11", "--adversary", "double-vote", "--report", path.to_str().unwrap()]);
        assert!(out.status.success());
        fs::read(path).unwrap()
    };
    assert_eq!(run("a.jsonl"), run("b.jsonl"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# base\nscenario = dkg\nn = 7\nt = 3\nseed = 2\nadversary = silent\ns_expected = 3\n").unwrap();
    let out = anytrust(&["dkg", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("dkg n=7 t=3 seed=9 adversary=silent"), "{stdout}");
}

#[test]
fn invalid_combinations_are_usage_errors() {
    for args in [
        &["dkg", "--trace"][..],
        &["dkg", "--n", "4", "--t", "2"],
        &["dkg", "--adversary", "nonsense"],
        &["dkg", "--n", "8", "--t", "3", "--corrupt", "4"],
        &["checkpoint", "--n", "16"],
        &["broadcast", "--epochs", "2"],
    ] {
        let out = anytrust(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn allocate_prints_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.txt");
    fs::write(&w, "5\n1\n1\n").unwrap();
    let out = anytrust(&["allocate", w.to_str().unwrap()]);
    assert!(out.status.success());
    let tsv = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = tsv.lines().collect();
    assert_eq!(rows[0], "index\tw\tw_adj\td");
    assert_eq!(rows.len(), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("qualified=true"));
}

#[test]
fn checkpoint_runs_epochs() {
    let out = anytrust(&["checkpoint", "--epochs", "2", "--s-expected", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("tx_count                 3"), "{stdout}");
}
