use std::path::PathBuf;
use std::process::{Command, Output};

use proptest::prelude::*;
use s4tower::table::Table;
use s4tower_cli::{compute_table, golden_diff, golden_ids, render_text};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s4tower"))
        .args(args)
        .current_dir(root())
        .env_remove("S4TOWER_GOLDEN_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn adem_prints_normal_form() {
    let o = cli(&["adem", "Sq1 Sq2"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "Sq3\n"));
    let o = cli(&["adem", "P1 P1", "--p", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["normal_form"], "2 P2");
}

#[test]
fn em_basis_marks_empty_degrees() {
    let o = cli(&["em-basis", "--space", "K(Z,4)", "--p", "2", "--max", "14"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "5: (none)"), "{text}");
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn flux_witness_reports_six() {
    let o = cli(&["flux", "--witness", "hp1-cubed", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pairing"], "6");
    assert_eq!(v["scope"], "necessary-condition check");
    let o = cli(&["flux", "--class", "2u + v + w", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pairing"], "12");
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["stable-tower", "--p", "2", "--bogus"]).status.code(), Some(2));
    assert_eq!(cli(&["adem"]).status.code(), Some(2));
    let o = cli(&["sss", "--spec", "no/such/file.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["kind"], "config");
    assert_eq!(cli(&["sss", "--p", "2", "--fibration", "X1", "--window", "20"]).status.code(), Some(3));
    assert_eq!(cli(&["golden-diff", "x1-p2"]).status.code(), Some(4));
    assert_eq!(cli(&["golden-diff", "hz-p2", "postnikov-p2"]).status.code(), Some(0));
}

#[test]
fn config_errors_carry_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "prime = 2\n[[fibration]]\nname = \"X\"\nbase = \"K(Z,4)\"\nwindw = 9\n").unwrap();
    let o = cli(&["sss", "--spec", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    let msg = rec["message"].as_str().unwrap();
    assert!(msg.contains("line 5") && msg.contains("windw"), "{msg}");
}

#[test]
fn golden_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(root().join("tables/hz-p2.tsv")).unwrap();
    std::fs::write(dir.path().join("hz-p2.tsv"), &good).unwrap();
    let run = |text: &str| {
        std::fs::write(dir.path().join("hz-p2.tsv"), text).unwrap();
        Command::new(env!("CARGO_BIN_EXE_s4tower"))
            .args(["golden-diff", "hz-p2"])
            .env("S4TOWER_GOLDEN_DIR", dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(run(&good).status.code(), Some(0));
    let tampered = good.replacen("Sq2", "Sq7", 1);
    let o = run(&tampered);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stdout(&o).matches("row ").count(), 1);
    std::fs::remove_file(dir.path().join("hz-p2.tsv")).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_s4tower"))
        .args(["golden-diff", "hz-p2"])
        .env("S4TOWER_GOLDEN_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(rec["status"], "error");
}

#[test]
fn outputs_are_deterministic() {
    for args in [
        &["sss", "--p", "3", "--log", "--chart"][..],
        &["stable-tower", "--p", "3", "--format", "json"],
        &["flux", "--sweep", "3", "--format", "json"],
    ] {
        assert_eq!(cli(args).stdout, cli(args).stdout, "{args:?}");
    }
}

#[test]
fn every_golden_round_trips() {
    for id in golden_ids() {
        let t = compute_table(&id).unwrap();
        assert_eq!(Table::from_tsv(&id, &t.to_tsv()).unwrap(), t);
        let r = golden_diff(&t, &t.to_tsv());
        assert!(r.byte_identical && r.matches());
    }
}

#[test]
fn unknown_table_id() {
    assert!(compute_table("nope").is_err());
}

#[test]
fn text_tables_align() {
    let mut t = Table::new("t", &["a", "bb"]);
    t.push(vec!["long".into(), "x".into()]);
    assert_eq!(render_text(&t), "a     bb\nlong  x\n");
}

proptest! {
    #[test]
    fn tsv_round_trip(rows in prop::collection::vec(prop::collection::vec("[a-z0-9 ,*()^]{0,8}", 3), 0..6)) {
        let mut t = Table::new("p", &["x", "y", "z"]);
        for r in rows {
            t.push(r);
        }
        prop_assert_eq!(Table::from_tsv("p", &t.to_tsv()).unwrap(), t);
    }
}
