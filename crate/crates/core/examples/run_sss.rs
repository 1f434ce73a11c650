use s4tower::sss::{run_unstable, UnstableSpec};

fn main() {
    let path = std::env::args().nth(1).expect("spec path");
    let spec = UnstableSpec::from_toml(&std::fs::read_to_string(path).unwrap()).unwrap();
    for run in run_unstable(&spec).unwrap() {
        println!("== {} unknowns {:?} variants {}", run.name, run.unknowns, run.variants.len());
        for d in &run.degrees {
            println!("{:>3} {:?} {:?} {}", d.n, d.dim, d.dims_seen, d.labels.join(", ") + if d.labels_vary { "  (labels vary)" } else { "" });
        }
        let v = run.representative();
        println!("square {:?} accounting {:?} replay {:?}", v.check_square_zero(), v.check_accounting(), v.check_replay());
        for e in &v.log.entries {
            println!("  d{} {:?} -> {:?}  {} -> {}  [{}]", e.r, e.source, e.target, e.source_label, e.target_label, e.rule);
        }
    }
}
