use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fi_traffic::lattice::{init_fixed_count, step, step_into, step_local};
use fi_traffic::FlowSample;

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for len in [10_000usize, 100_000, 1_000_000] {
        let config = init_fixed_count(len, len / 3, 7).unwrap();
        let mut out = config.clone();
        group.bench_with_input(BenchmarkId::new("car-rule", len), &config, |b, cfg| {
            b.iter(|| step_into(black_box(cfg), 2, &mut out))
        });
    }
    let config = init_fixed_count(10_000, 3_333, 7).unwrap();
    group.bench_function("site-local/10000", |b| {
        b.iter(|| step_local(black_box(&config), 2))
    });
    group.finish();
}

fn bench_measure(c: &mut Criterion) {
    let config = step(&init_fixed_count(100_000, 33_333, 3).unwrap(), 2);
    c.bench_function("measure/100000", |b| {
        b.iter(|| FlowSample::measure(black_box(&config), 2, 1))
    });
}

criterion_group!(benches, bench_step, bench_measure);
criterion_main!(benches);
