use std::path::PathBuf;

use s4tower::assembly::{assemble_primes, pi_consistency_check, HomotopyTable};
use s4tower::table::{diff, render_diff, Table};
use s4tower::tower::{postnikov_table, run_stable_tower, TowerReport, TowerSpec};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(name: &str) -> TowerReport {
    let text = std::fs::read_to_string(root().join("specs").join(name)).unwrap();
    let spec: TowerSpec = toml::from_str(&text).unwrap();
    run_stable_tower(&spec).unwrap()
}

fn golden(id: &str) -> Table {
    let text = std::fs::read_to_string(root().join("tables").join(format!("{id}.tsv"))).unwrap();
    Table::from_tsv(id, &text).unwrap()
}

fn stage<'a>(r: &'a TowerReport, name: &str) -> &'a s4tower::tower::StageSummary {
    r.stages.iter().find(|s| s.name == name).unwrap()
}

#[test]
fn p2_table_matches_golden() {
    let r = run("stable-p2.toml");
    let t = postnikov_table("postnikov-p2", &[(&r, None)]);
    let d = diff(&golden("postnikov-p2"), &t);
    assert!(d.is_empty(), "{}", render_diff(&d));
    let dev: Vec<_> = r.stages.iter().map(|s| s.deviation).collect();
    assert_eq!(dev, vec![Some(6), Some(7), Some(8), Some(11), Some(12), None]);
    assert_eq!(stage(&r, "X5").dims[12], 0);
}

#[test]
fn p2_fiber_restrictions() {
    let r = run("stable-p2.toml");
    let x1 = stage(&r, "X1");
    assert!(x1.restrictions.contains(&("X1_7".into(), "Sq2".into())));
    let x3 = stage(&r, "X3");
    assert!(x3.restrictions.contains(&("X3_11".into(), "Sq4".into())));
    // mod-2 shadows of the lifted classes
    let k = &r.k_invariants;
    assert_eq!(k[2].class, "p*Sq4 r2");
    assert_eq!(k[4].class, "p*Sq8 r2");
    assert!(k[2].checks.iter().any(|c| c == "Sq1 of p*Sq4 r2 is zero"));
}

#[test]
fn p35_table_matches_golden() {
    let r3 = run("stable-p3.toml");
    let r5 = run("stable-p5.toml");
    let t = postnikov_table("postnikov-p35", &[(&r3, Some("S4HZ(p=3)")), (&r5, Some("S4HZ(p=5)"))]);
    let d = diff(&golden("postnikov-p35"), &t);
    assert!(d.is_empty(), "{}", render_diff(&d));
    let y1 = stage(&r3, "Y1");
    assert_eq!(&y1.dims[8..12], &[0, 0, 0, 0]);
    assert_eq!(y1.dims[12], 1);
    assert_eq!(stage(&r3, "Y2").dims[12], 0);
    assert_eq!(stage(&r5, "Z1").dims[12], 0);
    assert!(r3.relations[0].vanishes);
}

#[test]
fn beta12_restriction_is_a_sum() {
    let r3 = run("stable-p3.toml");
    let y1 = stage(&r3, "Y1");
    assert_eq!(y1.restrictions, vec![("Y1_12".to_string(), "P1 b1 + b1 P1".to_string())]);
    // the single term is not a restriction of any class
    let text = std::fs::read_to_string(root().join("specs/stable-p3.toml")).unwrap();
    let mut spec: TowerSpec = toml::from_str(&text).unwrap();
    spec.stages[1].k_invariant = "fiber:P1 b1".into();
    let e = run_stable_tower(&spec).unwrap_err();
    assert!(e.to_string().contains("not the restriction"), "{e}");
}

#[test]
fn assembly_orders_and_findings() {
    let (r2, r3, r5) = (run("stable-p2.toml"), run("stable-p3.toml"), run("stable-p5.toml"));
    let s = assemble_primes(&[&r2, &r3, &r5]).unwrap();
    assert_eq!(s.orders(), vec![2, 2, 24, 2, 240]);
    assert_eq!(s.stages[2].fiber(), "S7HZ24");
    assert_eq!(s.stages[2].k_invariant, "(fSq4, p*P1 r3)");
    assert_eq!(s.stages[4].k_invariant, "(fSq8, beta12, p*P1 r5)");
    assert_eq!(s.stages[2].relations, vec!["p*P2 r3 = 0"]);
    let f = pi_consistency_check(&s, &HomotopyTable::builtin());
    assert_eq!(f.len(), 1, "{f:?}");
    assert_eq!(f[0].degree, 7);
    assert!(f[0].message.contains("Z12") && f[0].message.contains("24"));
}

#[test]
fn single_prime_assembly_is_identity() {
    let r5 = run("stable-p5.toml");
    let s = assemble_primes(&[&r5]).unwrap();
    assert_eq!(s.orders(), vec![5]);
    assert_eq!(s.stages[0].k_invariant, "P1 r5");
}
