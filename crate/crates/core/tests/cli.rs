use std::path::Path;
use std::process::{Command, Output};

fn syncforge(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syncforge"))
        .args(args)
        .current_dir(cwd)
        .env("SYNCFORGE_THREADS", "1")
        .output()
        .expect("spawn syncforge")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_train_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = syncforge(&["gen", "--strategy", "fc", "--L", "26", "--n", "600", "--seed", "3", "--out", "ds.bin"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(d.join("ds.bin").exists() && d.join("ds.bin.json").exists());

    let o = syncforge(&["train", "--data", "ds.bin", "--seed", "1", "--out", "m.elm"], d);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = syncforge(
        &["eval", "--model", "m.elm", "--trials", "50", "--snr-grid", "10,20", "--seed", "5", "--out", "e.csv"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(d.join("e.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("snr_db,errors,trials,p_e"));
    assert_eq!(lines.count(), 2);
    assert!(d.join("e.csv.resolved.txt").exists());
}

#[test]
fn baseline_eval_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a.csv", "b.csv"] {
        let o = syncforge(
            &["eval", "--baseline", "sc", "--trials", "200", "--snr-grid", "0,10", "--seed", "9", "--out", out],
            d,
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("b.csv")).unwrap());
}

#[test]
fn config_file_and_set_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.txt"), "n = 100\nseed = 4\n").unwrap();
    let o = syncforge(
        &["gen", "--strategy", "region", "--config", "c.txt", "--set", "n=120", "--out", "r.bin"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = std::fs::read_to_string(d.join("r.bin.resolved.txt")).unwrap();
    assert!(resolved.contains("120"), "{resolved}");
}

#[test]
fn violated_constraint_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = syncforge(&["gen", "--strategy", "lc", "--L", "40", "--n", "10"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("L=40") && msg.lines().count() == 1, "{msg}");
}

#[test]
fn missing_dataset_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = syncforge(&["train", "--data", "nope.bin"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dataset not found"));
}

#[test]
fn unknown_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["experiment", "fig9"][..],
        &["gen", "--set", "bogus=1"][..],
        &["gen", "--strategy", "zigzag"][..],
        &["frobnicate"][..],
    ] {
        let o = syncforge(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn help_lists_commands_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let top = String::from_utf8(syncforge(&["--help"], dir.path()).stdout).unwrap();
    for cmd in ["gen", "train", "eval", "experiment", "table3"] {
        assert!(top.contains(cmd), "{top}");
    }
    let gen = String::from_utf8(syncforge(&["gen", "--help"], dir.path()).stdout).unwrap();
    for flag in ["--strategy", "--L", "--Lc", "--N", "--seed", "--out", "--config", "--set"] {
        assert!(gen.contains(flag), "{gen}");
    }
}

#[test]
fn table3_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = syncforge(&["table3", "--nt", "500", "--seed", "2", "--out-dir", "t3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let entries: Vec<_> = std::fs::read_dir(dir.path().join("t3")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(entries.iter().any(|n| n.to_string_lossy().ends_with(".csv")), "{entries:?}");
}
