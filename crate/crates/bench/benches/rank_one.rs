use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use doa_core::linalg::hermitian_eigenvalues;
use doa_core::rank_one::eigenvalues;
use doa_core::{Complex64, RankOneMod, Which};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn instance(k: usize) -> RankOneMod {
    let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
    let mut d: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..10.0)).collect();
    d.sort_by(|a, b| b.total_cmp(a));
    let z = (0..k)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    RankOneMod::new(d, 0.7, z).unwrap()
}

fn bench_rank_one(c: &mut Criterion) {
    let mut group = c.benchmark_group("rank_one");
    for k in [8, 32, 128] {
        let m = instance(k);
        group.bench_with_input(BenchmarkId::new("secular_top1", k), &m, |b, m| {
            b.iter(|| eigenvalues(black_box(m), 1, Which::Largest, None).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("secular_all", k), &m, |b, m| {
            b.iter(|| eigenvalues(black_box(m), k, Which::Largest, None).unwrap())
        });
        let dense = m.to_dense();
        group.bench_with_input(BenchmarkId::new("dense_evd", k), &dense, |b, a| {
            b.iter(|| hermitian_eigenvalues(black_box(a)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rank_one);
criterion_main!(benches);
