use criterion::{criterion_group, criterion_main, Criterion};
use s4tower::flux::{divisibility_sweep, hp1_cubed_ring};
use s4tower::par::Schedule;
use s4tower::sss::{run_unstable_with, UnstableSpec};

const UNSTABLE_P2: &str = include_str!("../../../specs/unstable-p2.toml");

fn schedules() -> [(&'static str, Schedule); 2] {
    [("parallel", Schedule::Auto), ("sequential", Schedule::Sequential)]
}

fn unstable(c: &mut Criterion) {
    let spec = UnstableSpec::from_toml(UNSTABLE_P2).unwrap();
    let mut g = c.benchmark_group("unstable-p2");
    g.sample_size(10);
    for (name, s) in schedules() {
        g.bench_function(name, |b| b.iter(|| run_unstable_with(&spec, s).unwrap()));
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let ring = hp1_cubed_ring();
    let mut g = c.benchmark_group("divisibility-sweep");
    for (name, s) in schedules() {
        g.bench_function(name, |b| b.iter(|| divisibility_sweep(&ring, 5, s).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, unstable, sweep);
criterion_main!(benches);
