use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fouberry::fbm_sampler::{CholeskySampler, CirculantSampler, IncrementSampler};
use fouberry::rng::ReplicateRng;
use fouberry_bench::{grid, rough_model, SIZES};

fn bench_sampling(c: &mut Criterion) {
    let model = rough_model(10.0);
    let mut group = c.benchmark_group("one_path");
    for n in SIZES {
        let g = grid(&model, n);
        let circulant = CirculantSampler::new(&model, &g).unwrap();
        let cholesky = CholeskySampler::new(&model, &g).unwrap();
        let mut out = vec![0.0; n];
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("circulant", n), &n, |b, _| {
            let mut rng = ReplicateRng::new(1, 0, 0);
            b.iter(|| circulant.sample_into(&mut rng, &mut out))
        });
        group.bench_with_input(BenchmarkId::new("cholesky", n), &n, |b, _| {
            let mut rng = ReplicateRng::new(1, 0, 0);
            b.iter(|| cholesky.sample_into(&mut rng, &mut out))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sampling);
criterion_main!(benches);
