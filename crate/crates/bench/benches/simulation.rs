use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use coalfrag_core::coalescent::{sample_mg, MassVector};
use coalfrag_core::dynamics::{run, ProcessSpec};
use coalfrag_core::graph::GraphState;

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_er");
    for n in [1_000u32, 10_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                black_box(GraphState::sample_er(n, 0.0, seed).unwrap())
            });
        });
    }
    group.finish();
}

fn bench_components(c: &mut Criterion) {
    let g = GraphState::sample_er(10_000, 0.0, 42).unwrap();
    c.bench_function("components_n1e4", |b| b.iter(|| black_box(g.components())));
}

fn bench_dynperc(c: &mut Criterion) {
    let n = 10_000u32;
    let g = GraphState::sample_er(n, 0.0, 7).unwrap();
    let snaps: Vec<f64> = (1..=10).map(|i| f64::from(i) * 0.2).collect();
    let spec = ProcessSpec::dynamical_percolation_critical(n, 0.0, 2.0, snaps);
    let mut group = c.benchmark_group("dynperc_n1e4_t2");
    group.sample_size(10);
    group.bench_function("run", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(run(&g, &spec, seed).unwrap())
        });
    });
    group.finish();
}

fn bench_block_multigraph(c: &mut Criterion) {
    let g = GraphState::sample_er(2_000, 0.0, 3).unwrap();
    let x = MassVector::new(g.sizes_rescaled().values().to_vec()).unwrap();
    c.bench_function("sample_mg_g2000_sizes", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(sample_mg(&x, 1.0, seed))
        });
    });
}

criterion_group!(
    benches,
    bench_sampling,
    bench_components,
    bench_dynperc,
    bench_block_multigraph
);
criterion_main!(benches);
