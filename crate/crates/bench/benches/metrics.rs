use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::Rng;

use coalfrag_core::metric::{dghp_exact, l_ghp, rho_lp, Collection, FiniteMeasuredSpace};
use coalfrag_core::rng;

#[allow(clippy::needless_range_loop)]
fn random_space(gen: &mut impl Rng, points: usize) -> FiniteMeasuredSpace {
    let mut dist = vec![vec![0.0; points]; points];
    for i in 0..points {
        for j in (i + 1)..points {
            let d = gen.gen_range(0.2..3.0);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    for l in 0..points {
        for i in 0..points {
            for j in 0..points {
                if i != j {
                    let via = dist[i][l] + dist[l][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                        dist[j][i] = via;
                    }
                }
            }
        }
    }
    let mass = (0..points).map(|_| gen.gen_range(0.1..2.0)).collect();
    FiniteMeasuredSpace::new(dist, mass, None).unwrap()
}

fn bench_dghp(c: &mut Criterion) {
    let mut gen = rng::stream(1, "bench-ghp");
    let a3 = random_space(&mut gen, 3);
    let b3 = random_space(&mut gen, 3);
    let a4 = random_space(&mut gen, 4);
    let b4 = random_space(&mut gen, 5);
    c.bench_function("dghp_exact_3x3", |b| {
        b.iter(|| black_box(dghp_exact(&a3, &b3).unwrap()))
    });
    c.bench_function("dghp_exact_4x5", |b| {
        b.iter(|| black_box(dghp_exact(&a4, &b4).unwrap()))
    });
}

fn bench_collection_distances(c: &mut Criterion) {
    let mut gen = rng::stream(2, "bench-collections");
    let a = Collection::new((0..6).map(|_| random_space(&mut gen, 3)).collect());
    let b = Collection::new((0..6).map(|_| random_space(&mut gen, 3)).collect());
    c.bench_function("rho_lp_6x6", |bch| {
        bch.iter(|| black_box(rho_lp(&a, &b, None, 1e-9)))
    });
    c.bench_function("l_ghp_6x6", |bch| {
        bch.iter(|| black_box(l_ghp(&a, &b, 1e-9)))
    });
}

criterion_group!(benches, bench_dghp, bench_collection_distances);
criterion_main!(benches);
