use s4tower::tower::{postnikov_table, run_stable_tower, TowerSpec};

fn main() {
    let path = std::env::args().nth(1).expect("spec path");
    let spec: TowerSpec = toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let t0 = std::time::Instant::now();
    let r = run_stable_tower(&spec).unwrap();
    eprintln!("{:?}", t0.elapsed());
    for s in &r.stages {
        println!("{} dims {:?} dev {:?} undet {} restr {:?}", s.name, s.dims, s.deviation, s.undetermined.len(), s.restrictions);
        for (d, l) in s.labels.iter().enumerate() {
            if !l.is_empty() {
                println!("  {d}: {}", l.join(", "));
            }
        }
    }
    for k in &r.k_invariants {
        println!("k {} on {}: {} branches={} {:?}", k.label, k.stage, k.class, k.branches, k.checks);
    }
    println!("relations {:?} branches {}", r.relations, r.branches);
    println!("{}", postnikov_table("t", &[(&r, None)]).to_tsv());
}
